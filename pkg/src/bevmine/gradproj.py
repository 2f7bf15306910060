"""Depth-gradient projection and the pieces around it.

The reliable ("principal") gradient is the sum of the labeled-depth and
other-attribute gradients. When the pseudo-label depth gradient points
against it, the conflicting component is removed by projecting onto the
hyperplane normal to the principal gradient.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NonPositiveSigma, ZeroGradient, ZeroPrincipalGradient

STREAMS = ("ud", "sd", "o")
SQRT2 = math.sqrt(2.0)
EMA_MOMENTUM = 0.999


@dataclass(frozen=True, eq=False)
class GradientVector:
    values: np.ndarray
    stream: str

    def __post_init__(self):
        if self.stream not in STREAMS and self.stream != "p":
            raise ValueError(f"unknown loss stream {self.stream!r}")
        v = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(v)):
            raise ValueError("gradient entries must be finite")
        object.__setattr__(self, "values", v)

    def __add__(self, other: "GradientVector") -> "GradientVector":
        return GradientVector(self.values + _values(other), "p")


def _values(g) -> np.ndarray:
    return g.values if isinstance(g, GradientVector) else np.asarray(g, dtype=float)


def laplacian_depth_loss(d_pred: float, sigma: float, d_gt: float) -> tuple[float, float, float]:
    """Laplacian aleatoric depth loss and its partials.

    Returns ``(loss, dloss/dd_pred, dloss/dsigma)``. At zero residual the
    subgradient with respect to ``d_pred`` is taken as 0.
    """
    if not sigma > 0:
        raise NonPositiveSigma(f"sigma must be positive, got {sigma}")
    resid = d_pred - d_gt
    loss = SQRT2 / sigma * abs(resid) + math.log(sigma)
    d_pred_grad = SQRT2 / sigma * float(np.sign(resid))
    d_sigma_grad = -SQRT2 * abs(resid) / sigma**2 + 1.0 / sigma
    return loss, d_pred_grad, d_sigma_grad


def cosine(a, b) -> float:
    a, b = _values(a), _values(b)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ZeroGradient("cosine undefined for a zero vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def _rowdot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("...i,...i->...", a, b)[..., None]


def project_depth_gradient(g_ud, g_p):
    """Drop the component of ``g_ud`` that opposes ``g_p``.

    Only applied when the two conflict (cosine strictly negative);
    otherwise ``g_ud`` is returned unchanged. Plain arrays may carry leading
    batch axes, in which case each row pair is handled independently.
    """
    u, p = _values(g_ud), _values(g_p)
    if u.shape[-1] != p.shape[-1]:
        raise DimensionMismatch(f"g_ud has {u.shape[-1]} entries, g_p has {p.shape[-1]}")
    scale = np.max(np.abs(p), axis=-1, keepdims=True)
    if np.any(scale == 0):
        raise ZeroPrincipalGradient("principal gradient is zero")
    # the result does not depend on the length of g_p; rescaling avoids underflow
    p = p / scale
    pp = _rowdot(p, p)
    up = _rowdot(u, p)
    conflict = up < 0
    out = u - np.where(conflict, up / pp, 0.0) * p
    # a second pass removes the rounding left when g_ud is nearly antiparallel to g_p
    r = _rowdot(out, p)
    out = np.where(conflict, out - (r / pp) * p, u)
    if isinstance(g_ud, GradientVector):
        return GradientVector(out, g_ud.stream)
    return out


def combine_step_gradient(g_sd, g_o, g_ud):
    """Total update direction: principal gradient plus the projected ud term."""
    p = _values(g_sd) + _values(g_o)
    if not np.any(p):
        ud = _values(g_ud)
    else:
        ud = _values(project_depth_gradient(_values(g_ud), p))
    total = p + ud
    if isinstance(g_ud, GradientVector):
        return GradientVector(total, "p")
    return total


def ema_update(teacher, student, momentum: float = EMA_MOMENTUM) -> np.ndarray:
    teacher = np.asarray(teacher, dtype=float)
    student = np.asarray(student, dtype=float)
    if teacher.shape != student.shape:
        raise DimensionMismatch(f"teacher {teacher.shape} vs student {student.shape}")
    if not 0.0 <= momentum <= 1.0:
        raise ValueError("momentum must lie in [0, 1]")
    return momentum * teacher + (1.0 - momentum) * student


# -- toy harness ---------------------------------------------------------------

TRACE_COLUMNS = ("step", "cos_ud_p", "cos_ud_sd", "cos_ud_o", "cos_sd_o", "loss_sd", "loss_ud", "loss_o")


@dataclass(frozen=True)
class HarnessConfig:
    """Toy depth-regression experiment.

    A linear model predicts depth from ``dim`` features (first one is a bias).
    ``sd`` fits clean depth on the labeled samples, ``ud`` fits noisy depth
    pseudo-labels on the unlabeled samples, ``o`` fits an auxiliary target (a
    second linear read-out of the same parameters) on all samples, exact on
    labeled ones and mildly noisy on unlabeled ones.
    """

    dim: int = 8
    n_labeled: int = 16
    n_unlabeled: int = 64
    mean_depth: float = 20.0
    depth_spread: float = 5.0
    aux_mixing: float = 0.5
    init_offset_std: float = 0.5
    pseudo_noise_base: float = 2.0
    pseudo_noise_per_meter: float = 0.1
    aux_noise_std: float = 0.3
    alpha: float = 1.0
    lr: float = 1e-2
    steps: int = 500
    projection: bool = False

    def __post_init__(self):
        if self.dim < 2 or self.n_labeled < 1 or self.n_unlabeled < 1 or self.steps < 1:
            raise ValueError("harness sizes must be positive (dim >= 2)")
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if min(self.pseudo_noise_base, self.pseudo_noise_per_meter, self.aux_noise_std) < 0:
            raise ValueError("noise scales must be non-negative")


@dataclass
class ToyModel:
    params: np.ndarray
    depth_features: np.ndarray = field(repr=False)
    aux_features: np.ndarray = field(repr=False)

    def depth(self, rows=slice(None)) -> np.ndarray:
        return self.depth_features[rows] @ self.params

    def aux(self) -> np.ndarray:
        return self.aux_features @ self.params


@dataclass
class ConflictReport:
    seed: int
    projection: bool
    trace: np.ndarray  # (steps, len(TRACE_COLUMNS))
    final_loss_sd: float
    final_loss_o: float
    final_loss_ud: float
    min_applied_cos: float  # min over steps of cos(applied ud component, g_p)

    @property
    def final_reliable_loss(self) -> float:
        return self.final_loss_sd + self.final_loss_o

    def column(self, name: str) -> np.ndarray:
        return self.trace[:, TRACE_COLUMNS.index(name)]


def _mse_and_grad(X: np.ndarray, theta: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    r = X @ theta - y
    return float(np.mean(r**2)), 2.0 * X.T @ r / len(y)


def _safe_cos(a, b) -> float:
    try:
        return cosine(a, b)
    except ZeroGradient:
        return math.nan


def _build_problem(cfg: HarnessConfig, rng: np.random.Generator):
    n = cfg.n_labeled + cfg.n_unlabeled
    feats = np.column_stack([np.ones(n), rng.standard_normal((n, cfg.dim - 1))])
    theta_star = np.concatenate([[cfg.mean_depth], cfg.depth_spread * rng.standard_normal(cfg.dim - 1) / math.sqrt(cfg.dim - 1)])
    mixing = np.eye(cfg.dim) + cfg.aux_mixing * rng.standard_normal((cfg.dim, cfg.dim)) / math.sqrt(cfg.dim)
    aux_feats = feats @ mixing
    depth_true = feats @ theta_star
    scale = cfg.pseudo_noise_base + cfg.pseudo_noise_per_meter * np.abs(depth_true[cfg.n_labeled:])
    pseudo = depth_true[cfg.n_labeled:] + rng.laplace(0.0, 1.0, cfg.n_unlabeled) * scale
    theta0 = theta_star + cfg.init_offset_std * rng.standard_normal(cfg.dim)
    aux_target = aux_feats @ theta_star
    # auxiliary pseudo-labels on unlabeled samples are close but not exact
    aux_target[cfg.n_labeled:] += cfg.aux_noise_std * rng.standard_normal(cfg.n_unlabeled)
    model = ToyModel(theta0, feats, aux_feats)
    return model, depth_true, pseudo, aux_target


def run_toy_experiment(cfg: HarnessConfig, seed: int) -> ConflictReport:
    """Full-batch gradient descent on the three-stream toy problem."""
    rng = np.random.default_rng(seed)
    model, depth_true, pseudo, aux_target = _build_problem(cfg, rng)
    lab = slice(0, cfg.n_labeled)
    unl = slice(cfg.n_labeled, None)
    X = model.depth_features

    def losses_and_grads(theta):
        l_sd, g_sd = _mse_and_grad(X[lab], theta, depth_true[lab])
        l_ud, g_ud = _mse_and_grad(X[unl], theta, pseudo)
        l_o, g_o = _mse_and_grad(model.aux_features, theta, aux_target)
        return (l_sd, cfg.alpha * l_ud, l_o), (g_sd, cfg.alpha * g_ud, g_o)

    trace = np.empty((cfg.steps, len(TRACE_COLUMNS)))
    min_applied = math.inf
    theta = model.params.copy()
    for step in range(cfg.steps):
        (l_sd, l_ud, l_o), (g_sd, g_ud, g_o) = losses_and_grads(theta)
        g_p = g_sd + g_o
        trace[step] = (
            step,
            _safe_cos(g_ud, g_p),
            _safe_cos(g_ud, g_sd),
            _safe_cos(g_ud, g_o),
            _safe_cos(g_sd, g_o),
            l_sd,
            l_ud,
            l_o,
        )
        if cfg.projection and np.any(g_p):
            ud_applied = project_depth_gradient(g_ud, g_p)
        else:
            ud_applied = g_ud
        c = _safe_cos(ud_applied, g_p)
        if not math.isnan(c):
            min_applied = min(min_applied, c)
        theta = theta - cfg.lr * (g_p + ud_applied)

    model.params = theta
    (l_sd, l_ud, l_o), _ = losses_and_grads(theta)
    return ConflictReport(
        seed=seed,
        projection=cfg.projection,
        trace=trace,
        final_loss_sd=l_sd,
        final_loss_o=l_o,
        final_loss_ud=l_ud,
        min_applied_cos=min_applied,
    )
