"""Training loop for :class:`~sbe_wavelets.nn.ToyNet` on the texture dataset."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import torch
import torch.nn.functional as F

from .data import TextureDataset, make_dataset
from .lattice import ConfigurationError
from .nn import ToyNet
from .spectral import LossWeights, SpectralGrid, response_table, total_loss


class NumericalError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    alpha: float = 0.0
    lr: float = 0.05
    momentum: float = 0.9
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0
    K: int = 500
    w_s: float = 0.6 * math.pi
    wavelet: str = "db2"
    baseline: bool = False
    data_seed: int | None = None
    per_class: int = 500
    train_subset: int | None = None
    float64: bool = False

    def __post_init__(self):
        LossWeights(self.alpha)
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if not (math.isfinite(self.lr) and self.lr > 0):
            raise ConfigurationError(f"lr must be positive and finite, got {self.lr}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")

    @property
    def grid(self) -> SpectralGrid:
        return SpectralGrid(K=self.K, w_s_lowpass=self.w_s)

    @property
    def dataset_seed(self) -> int:
        return self.seed if self.data_seed is None else self.data_seed

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainedModel:
    net: ToyNet
    config: TrainConfig
    history: list[dict] = field(default_factory=list)
    steps: list[dict] = field(default_factory=list)

    def unit_banks(self):
        return [u.bank() for u in self.net.units()]

    def unit_sbe(self) -> list[float]:
        grid = self.config.grid
        with torch.no_grad():
            return [float(u.sbe(grid)) for u in self.net.units()]


METRIC_FIELDS = ("epoch", "l_ce", "l_sbe", "l_total", "train_acc", "test_acc")


def build_net(cfg: TrainConfig) -> ToyNet:
    torch.manual_seed(cfg.seed)
    net = ToyNet(n_classes=3, wavelet=cfg.wavelet, baseline=cfg.baseline)
    if cfg.float64:
        net = net.double()
    return net


def _dtype(cfg: TrainConfig):
    return torch.float64 if cfg.float64 else torch.float32


def _tensors(x, y, cfg):
    return torch.from_numpy(np.asarray(x)).to(_dtype(cfg)), torch.from_numpy(np.asarray(y))


def composite_loss(net: ToyNet, x, y, cfg: TrainConfig):
    """``(l_total, l_ce, l_sbe)`` tensors for one batch."""
    logits = net(x)
    l_ce = F.cross_entropy(logits, y)
    l_sbe = net.mean_sbe(cfg.grid)
    a = cfg.alpha
    l_total = (1.0 - a) * l_ce.to(torch.float64) + a * l_sbe
    return l_total, l_ce, l_sbe


@torch.no_grad()
def _predict(net: ToyNet, x: torch.Tensor, batch: int = 256) -> torch.Tensor:
    # inference uses the batch-norm running statistics
    was_training = net.training
    net.eval()
    try:
        return torch.cat([net(x[i : i + batch]) for i in range(0, len(x), batch)])
    finally:
        net.train(was_training)


def _check_banks(net: ToyNet) -> None:
    for u in net.units():
        u.bank().check()


def train(data: TextureDataset, cfg: TrainConfig, net: ToyNet | None = None) -> TrainedModel:
    """Minimize ``(1 - alpha) * CE + alpha * mean unit stop-band loss`` with SGD.

    Epoch 0 in the history is the untrained network.  Everything is seeded
    from ``cfg.seed``, so identical configs give bit-identical histories.
    """
    torch.manual_seed(cfg.seed)
    net = net if net is not None else build_net(cfg)
    if cfg.train_subset is not None:
        data = data.subset(cfg.train_subset)
    x_tr, y_tr = _tensors(data.x_train, data.y_train, cfg)
    x_te, y_te = _tensors(data.x_test, data.y_test, cfg)
    opt = torch.optim.SGD(net.parameters(), lr=cfg.lr, momentum=cfg.momentum)
    gen = torch.Generator().manual_seed(cfg.seed)
    model = TrainedModel(net, cfg)

    def record(epoch):
        with torch.no_grad():
            logits = _predict(net, x_tr)
            l_ce = float(F.cross_entropy(logits, y_tr))
            train_acc = float((logits.argmax(1) == y_tr).double().mean())
            test_acc = float((_predict(net, x_te).argmax(1) == y_te).double().mean())
            l_sbe = float(net.mean_sbe(cfg.grid))
        model.history.append(
            dict(epoch=epoch, l_ce=l_ce, l_sbe=l_sbe,
                 l_total=total_loss(l_ce, l_sbe, cfg.alpha),
                 train_acc=train_acc, test_acc=test_acc)
        )

    net.train()
    record(0)
    for epoch in range(1, cfg.epochs + 1):
        perm = torch.randperm(len(x_tr), generator=gen)
        for i in range(0, len(perm), cfg.batch_size):
            idx = perm[i : i + cfg.batch_size]
            opt.zero_grad()
            l_total, l_ce, l_sbe = composite_loss(net, x_tr[idx], y_tr[idx], cfg)
            if not torch.isfinite(l_total):
                raise NumericalError(
                    f"non-finite loss at epoch {epoch}, step {i // cfg.batch_size}; "
                    f"lower the learning rate (currently {cfg.lr})"
                )
            l_total.backward()
            opt.step()
            if not all(torch.isfinite(p).all() for p in net.parameters()):
                raise NumericalError(
                    f"parameters overflowed at epoch {epoch}, step {i // cfg.batch_size}; "
                    f"lower the learning rate (currently {cfg.lr})"
                )
            _check_banks(net)
            model.steps.append(
                dict(l_ce=l_ce.item(), l_sbe=l_sbe.item(), l_total=l_total.item())
            )
        record(epoch)
    return model


@dataclass(frozen=True)
class Evaluation:
    accuracy: float
    per_class: np.ndarray
    confusion: np.ndarray


def evaluate_predictions(pred, labels, n_classes: int) -> Evaluation:
    pred = np.asarray(pred)
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ConfigurationError("cannot evaluate on an empty dataset")
    conf = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(conf, (labels, pred), 1)
    counts = conf.sum(axis=1)
    per_class = np.divide(np.diag(conf), counts, out=np.zeros(n_classes), where=counts > 0)
    return Evaluation(float(np.trace(conf) / labels.size), per_class, conf)


def evaluate(model: TrainedModel | ToyNet, x, y, n_classes: int = 3) -> Evaluation:
    net = model.net if isinstance(model, TrainedModel) else model
    if len(y) == 0:
        raise ConfigurationError("cannot evaluate on an empty dataset")
    xt = torch.from_numpy(np.asarray(x)).to(net.stem.weight.dtype)
    if xt.ndim == 3:
        xt = xt[:, None]
    if xt.ndim != 4 or xt.shape[1] != 1:
        raise ConfigurationError(f"expected single-channel images, got {tuple(xt.shape)}")
    pred = _predict(net, xt).argmax(1).numpy()
    return evaluate_predictions(pred, y, n_classes)


def alpha_sweep(cfg_base: TrainConfig, alphas, data: TextureDataset | None = None) -> list[dict]:
    """One training run per alpha, all sharing ``cfg_base``'s seed."""
    alphas = list(alphas)
    for a in alphas:
        LossWeights(a)
    if not alphas:
        return []
    data = data if data is not None else make_dataset(cfg_base.dataset_seed, cfg_base.per_class)
    report = []
    for a in alphas:
        cfg = replace(cfg_base, alpha=float(a))
        model = train(data, cfg)
        report.append(
            dict(
                alpha=float(a),
                model=model,
                final=model.history[-1],
                unit_sbe=model.unit_sbe(),
                responses=[response_table(b.h0, b.h1, cfg.grid) for b in model.unit_banks()],
            )
        )
    return report
