"""
Training with the stop-band penalty
===================================

A short run on the synthetic texture set, once without the penalty and once
with alpha = 0.75.  The penalty pulls every unit's low-pass filter towards
stronger stop-band attenuation while the classifier trains.
Pass ``--epochs`` to run longer (the harness default is 30).
"""

import argparse

import torch

from sbe_wavelets.data import make_dataset
from sbe_wavelets.train import TrainConfig, train

parser = argparse.ArgumentParser()
parser.add_argument("--epochs", type=int, default=5)
args = parser.parse_args()
torch.set_num_threads(1)

data = make_dataset(seed=0)
print("train", data.x_train.shape, "test", data.x_test.shape)

for alpha in (0.0, 0.75):
    model = train(data, TrainConfig(alpha=alpha, epochs=args.epochs, seed=0))
    print(f"\nalpha = {alpha}")
    print(" epoch   l_ce    l_sbe   test_acc")
    for row in model.history:
        print(f" {row['epoch']:5d}  {row['l_ce']:.4f}  {row['l_sbe']:.4f}  {row['test_acc']:.3f}")
    print(" per-unit L_SBE:", ", ".join(f"{s:.4f}" for s in model.unit_sbe()))
