"""Finite-difference oracle for the full network.

ReLU kinks make plain central differences unreliable at any step that is
large enough to beat float64 roundoff.  The activation pattern is recorded at
the base point and replayed as fixed masks, so the perturbed network stays on
the same smooth piece and a wide five-point stencil can be used.
"""

import contextlib
import types

import numpy as np
import torch
import torch.nn.functional as TF

import sbe_wavelets.nn as nn_module
from sbe_wavelets.train import composite_loss


@contextlib.contextmanager
def frozen_relu(masks):
    record = not masks
    replay = iter(masks)

    def relu(t):
        if record:
            masks.append(t.detach() > 0)
            return TF.relu(t)
        return t * next(replay)

    orig = nn_module.F
    nn_module.F = types.SimpleNamespace(relu=relu)
    try:
        yield
    finally:
        nn_module.F = orig


def sample_parameters(net, rng, n_total=20, n_angles=5):
    named = list(net.named_parameters())
    angle_slots = [(n, i) for n, p in named if n.endswith("angles") for i in np.ndindex(p.shape)]
    other_slots = [(n, i) for n, p in named if not n.endswith("angles") for i in np.ndindex(p.shape)]
    pick_a = rng.choice(len(angle_slots), min(n_angles, len(angle_slots)), replace=False)
    pick_o = rng.choice(len(other_slots), n_total - len(pick_a), replace=False)
    return [angle_slots[i] for i in pick_a] + [other_slots[i] for i in pick_o]


def numeric_gradients(net64, x, y, cfg, slots, step=1e-3):
    """Five-point central differences of the composite loss, ReLU masks frozen."""
    masks = []
    with torch.no_grad(), frozen_relu(masks):
        composite_loss(net64, x, y, cfg)
    params = dict(net64.named_parameters())

    def loss_at(p, idx, value):
        p[idx] = value
        with frozen_relu(masks):
            return composite_loss(net64, x, y, cfg)[0].item()

    out = {}
    with torch.no_grad():
        for name, idx in slots:
            p = params[name]
            orig = p[idx].item()
            f = {k: loss_at(p, idx, orig + k * step) for k in (-2, -1, 1, 2)}
            p[idx] = orig
            out[(name, idx)] = (8 * (f[1] - f[-1]) - (f[2] - f[-2])) / (12 * step)
    return out


def grad_rel_err(a, b, floor):
    return abs(a - b) / max(abs(a), abs(b), floor)
