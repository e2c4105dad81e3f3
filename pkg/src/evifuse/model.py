"""Multi-view evidential classifier with exact manual gradients.

Each view owns a small evidence network (affine, or one hidden tanh layer)
whose softplus output is per-class evidence; concentrations are
``alpha = evidence + 1``.  Per-view opinions are combined with the reduced
Dempster rule (missing views enter as the neutral vacuous opinion, which is
an exact identity of the rule), and the fused opinion is mapped back to a
Dirichlet.  A pseudo view runs on the concatenated per-view features.

The loss for every head (fused, per view, pseudo) is the expected
cross-entropy under the head's Dirichlet plus an annealed divergence
penalty against the uniform Dirichlet, computed on the label-masked
concentration ``alpha_tilde = onehot(y) + (1 - onehot(y)) * alpha``.
Backpropagation is written out by hand, including the pass through the
fusion fold, and is checked against central finite differences in the
test suite.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .data import MultiViewBatch
from .divergence import HolderConfig
from .errors import DomainError, NonFiniteLossError
from .kalman import KalmanState, filter_sequence
from .special import digamma, log_gamma, trigamma

REGULARIZER_KINDS = ("phd", "kl")


def _softplus(z):
    return np.logaddexp(0.0, z)


def _sigmoid(z):
    return np.exp(-np.logaddexp(0.0, -z))


# --- networks ---------------------------------------------------------------


class ViewNetwork:
    """Evidence head: affine map or one hidden tanh layer, softplus output."""

    def __init__(self, w1, b1, w2=None, b2=None):
        self.w1 = np.asarray(w1, dtype=np.float64)
        self.b1 = np.asarray(b1, dtype=np.float64)
        self.w2 = None if w2 is None else np.asarray(w2, dtype=np.float64)
        self.b2 = None if b2 is None else np.asarray(b2, dtype=np.float64)

    @classmethod
    def create(cls, rng: np.random.Generator, d_in: int, k: int, hidden: int = 0):
        def glorot(fan_in, fan_out):
            s = np.sqrt(6.0 / (fan_in + fan_out))
            return rng.uniform(-s, s, size=(fan_in, fan_out))

        if hidden > 0:
            return cls(
                glorot(d_in, hidden),
                np.zeros(hidden),
                glorot(hidden, k),
                np.zeros(k),
            )
        return cls(glorot(d_in, k), np.zeros(k))

    @property
    def hidden(self) -> int:
        return 0 if self.w2 is None else self.w1.shape[1]

    @property
    def d_in(self) -> int:
        return self.w1.shape[0]

    @property
    def k(self) -> int:
        return self.b1.size if self.w2 is None else self.b2.size

    def param_names(self):
        return ("w1", "b1") if self.w2 is None else ("w1", "b1", "w2", "b2")

    def forward(self, x):
        """Logits plus the cache needed for the backward pass."""
        if self.w2 is None:
            return x @ self.w1 + self.b1, (x, None)
        h = np.tanh(x @ self.w1 + self.b1)
        return h @ self.w2 + self.b2, (x, h)

    def backward(self, cache, gz):
        x, h = cache
        if self.w2 is None:
            return {"w1": x.T @ gz, "b1": gz.sum(axis=0)}
        gh = gz @ self.w2.T
        ga = gh * (1.0 - h * h)
        return {
            "w1": x.T @ ga,
            "b1": ga.sum(axis=0),
            "w2": h.T @ gz,
            "b2": gz.sum(axis=0),
        }


@dataclass
class EvidentialModel:
    view_nets: list[ViewNetwork]
    pseudo_net: ViewNetwork | None
    k: int

    @property
    def m(self) -> int:
        return len(self.view_nets)

    @property
    def use_pseudo(self) -> bool:
        return self.pseudo_net is not None

    def all_nets(self):
        nets = list(self.view_nets)
        if self.pseudo_net is not None:
            nets.append(self.pseudo_net)
        return nets

    @classmethod
    def create(cls, rng, dims, k, hidden=0, use_pseudo=True):
        nets = [ViewNetwork.create(rng, d, k, hidden) for d in dims]
        pseudo = (
            ViewNetwork.create(rng, int(sum(dims)), k, hidden) if use_pseudo else None
        )
        return cls(nets, pseudo, k)


@dataclass
class TrainConfig:
    holder: HolderConfig = field(default_factory=lambda: HolderConfig(2.0, 1.0))
    lambda_max: float = 1.0
    anneal_epochs: int = 10
    learning_rate: float = 5e-3
    epochs: int = 40
    batch_size: int = 128
    regularizer_kind: str = "phd"
    seed: int = 0
    hidden: int = 16
    use_pseudo: bool = True
    mask_label: bool = True

    def __post_init__(self):
        if self.anneal_epochs < 1:
            raise ValueError("anneal_epochs must be at least 1")
        if not 0.0 <= self.lambda_max <= 1.0:
            raise ValueError("lambda_max must lie in [0, 1]")
        self.regularizer_kind = self.regularizer_kind.lower()
        if self.regularizer_kind not in REGULARIZER_KINDS:
            raise ValueError(f"regularizer_kind must be one of {REGULARIZER_KINDS}")

    def lambda_at(self, epoch: int) -> float:
        return self.lambda_max * min(1.0, epoch / self.anneal_epochs)


# --- losses on concentration rows -------------------------------------------


def _log_normalizer_rows(theta):
    a = theta + 1.0
    return log_gamma(a).sum(axis=1) - log_gamma(a.sum(axis=1))


def _grad_log_normalizer_rows(theta):
    a = theta + 1.0
    return digamma(a) - digamma(a.sum(axis=1))[:, None]


def _ce_rows(alpha, y):
    s = alpha.sum(axis=1)
    return digamma(s) - digamma(alpha[np.arange(alpha.shape[0]), y])


def _ce_grad_rows(alpha, y):
    rows = np.arange(alpha.shape[0])
    s = alpha.sum(axis=1)
    g = np.repeat(trigamma(s)[:, None], alpha.shape[1], axis=1)
    g[rows, y] -= trigamma(alpha[rows, y])
    return g


def _phd_reg_rows(alpha_t, cfg: HolderConfig):
    a, b, g = cfg.alpha_h, cfg.beta_h, cfg.gamma
    theta = alpha_t - 1.0
    k = alpha_t.shape[1]
    f_zero = -log_gamma(float(k))
    val = (
        _log_normalizer_rows(g * theta) / a
        + f_zero / b
        - _log_normalizer_rows((g / a) * theta)
    )
    grad = (g / a) * (
        _grad_log_normalizer_rows(g * theta) - _grad_log_normalizer_rows((g / a) * theta)
    )
    return val, grad


def _kl_reg_rows(alpha_t):
    s = alpha_t.sum(axis=1)
    k = alpha_t.shape[1]
    val = (
        log_gamma(s)
        - log_gamma(alpha_t).sum(axis=1)
        - log_gamma(float(k))
        + ((alpha_t - 1.0) * (digamma(alpha_t) - digamma(s)[:, None])).sum(axis=1)
    )
    grad = (alpha_t - 1.0) * trigamma(alpha_t) - trigamma(s)[:, None] * (s - k)[:, None]
    return val, grad


def _reg_rows(alpha, y, kind, cfg, mask_label=True):
    if mask_label:
        alpha_t = alpha.copy()
        alpha_t[np.arange(alpha.shape[0]), y] = 1.0
    else:
        alpha_t = alpha
    val, grad_t = _phd_reg_rows(alpha_t, cfg) if kind == "phd" else _kl_reg_rows(alpha_t)
    if mask_label:
        grad = grad_t.copy()
        grad[np.arange(alpha.shape[0]), y] = 0.0
    else:
        grad = grad_t
    return val, grad


def expected_cross_entropy(d, y: int) -> float:
    """E[-log mu_y] under Dir(alpha): psi(S) - psi(alpha_y)."""
    alpha = np.asarray(d.alpha, dtype=np.float64)
    if not 0 <= y < alpha.size:
        raise ValueError("label out of range")
    return float(digamma(alpha.sum()) - digamma(alpha[y]))


def regularizer(d, y: int, kind: str, cfg: HolderConfig, mask_label: bool = True) -> float:
    """Divergence of the (optionally label-masked) Dirichlet from uniform."""
    kind = kind.lower()
    if kind not in REGULARIZER_KINDS:
        raise ValueError(f"kind must be one of {REGULARIZER_KINDS}")
    alpha = np.asarray(d.alpha, dtype=np.float64)[None, :]
    val, _ = _reg_rows(alpha, np.array([y]), kind, cfg, mask_label)
    return float(val[0])


# --- fusion fold -------------------------------------------------------------


def _opinions_from_alpha(alpha):
    s = alpha.sum(axis=1)
    k = alpha.shape[1]
    return (alpha - 1.0) / s[:, None], k / s


def _alpha_grad_from_opinion(alpha, gb, gu):
    s = alpha.sum(axis=1)
    k = alpha.shape[1]
    mixed = (gb * (alpha - 1.0)).sum(axis=1) + gu * k
    return gb / s[:, None] - mixed[:, None] / (s * s)[:, None]


def _combine_batch(b1, u1, b2, u2):
    dot = (b1 * b2).sum(axis=1)
    c = (1.0 - u1) * (1.0 - u2) - dot
    t = 1.0 - c
    b = (b1 * b2 + (b1 * u2[:, None] + b2 * u1[:, None])) / t[:, None]
    u = u1 * u2 / t
    return b, u, t


def _combine_batch_vjp(saved, gb, gu):
    b1, u1, b2, u2, t, b_out, u_out = saved
    g_nb = gb / t[:, None]
    g_uu = gu / t
    g_t = -((gb * b_out).sum(axis=1) + gu * u_out) / t
    g_c = -g_t
    gb1 = g_nb * (b2 + u2[:, None]) - g_c[:, None] * b2
    gb2 = g_nb * (b1 + u1[:, None]) - g_c[:, None] * b1
    gu1 = (g_nb * b2).sum(axis=1) + g_uu * u2 - g_c * (1.0 - u2)
    gu2 = (g_nb * b1).sum(axis=1) + g_uu * u1 - g_c * (1.0 - u1)
    return gb1, gu1, gb2, gu2


# --- forward -----------------------------------------------------------------


@dataclass
class ForwardResult:
    alpha_views: list[np.ndarray]
    alpha_fused: np.ndarray
    alpha_pseudo: np.ndarray | None
    beliefs_fused: np.ndarray
    u_fused: np.ndarray


def _forward_internal(model: EvidentialModel, batch: MultiViewBatch):
    if batch.m != model.m:
        raise ValueError("batch view count does not match the model")
    if not batch.mask.any(axis=1).all():
        raise ValueError("every sample needs at least one present view")
    caches = {"views": [], "stages": []}
    subs = []
    for m, net in enumerate(model.view_nets):
        z, cache = net.forward(batch.views[m])
        alpha = _softplus(z) + 1.0
        b, u = _opinions_from_alpha(alpha)
        present = batch.mask[:, m]
        b_sub = np.where(present[:, None], b, 0.0)
        u_sub = np.where(present, u, 1.0)
        caches["views"].append({"z": z, "cache": cache, "alpha": alpha})
        subs.append((b_sub, u_sub))
    cur_b, cur_u = subs[0]
    for m in range(1, model.m):
        b2, u2 = subs[m]
        nb, nu, t = _combine_batch(cur_b, cur_u, b2, u2)
        caches["stages"].append((cur_b, cur_u, b2, u2, t, nb, nu))
        cur_b, cur_u = nb, nu
    alpha_fused = cur_b * (model.k / cur_u)[:, None] + 1.0
    caches["fused"] = (cur_b, cur_u, alpha_fused)

    alpha_pseudo = None
    if model.use_pseudo:
        xp = batch.pseudo_features()
        zp, cache_p = model.pseudo_net.forward(xp)
        alpha_pseudo = _softplus(zp) + 1.0
        caches["pseudo"] = {"z": zp, "cache": cache_p, "alpha": alpha_pseudo}
    return (
        ForwardResult(
            [v["alpha"] for v in caches["views"]],
            alpha_fused,
            alpha_pseudo,
            cur_b,
            cur_u,
        ),
        caches,
    )


def forward(model: EvidentialModel, batch: MultiViewBatch) -> ForwardResult:
    """Per-view, fused and pseudo concentrations for a batch."""
    result, _ = _forward_internal(model, batch)
    return result


# --- loss and gradients ------------------------------------------------------


def _head_terms(alpha, y, lam, cfg: TrainConfig):
    ce = _ce_rows(alpha, y)
    g = _ce_grad_rows(alpha, y)
    if lam > 0.0:
        reg, greg = _reg_rows(
            alpha, y, cfg.regularizer_kind, cfg.holder, cfg.mask_label
        )
        return ce, reg, g + lam * greg
    return ce, np.zeros_like(ce), g


def _loss_and_grads(model, batch, cfg: TrainConfig, epoch, want_grads=True):
    result, caches = _forward_internal(model, batch)
    lam = cfg.lambda_at(epoch)
    n = batch.n
    y = batch.labels
    breakdown = {"lambda": lam}

    try:
        fused_ce, fused_reg, g_fused = _head_terms(result.alpha_fused, y, lam, cfg)
        view_terms = [
            _head_terms(caches["views"][m]["alpha"], y, lam, cfg)
            for m in range(model.m)
        ]
        pseudo_terms = (
            _head_terms(result.alpha_pseudo, y, lam, cfg) if model.use_pseudo else None
        )
    except DomainError as err:
        raise DomainError(f"regularizer failed at epoch {epoch}: {err}") from err

    loss = float(np.mean(fused_ce + lam * fused_reg))
    breakdown["fused_ce"] = float(np.mean(fused_ce))
    breakdown["fused_reg"] = float(np.mean(fused_reg))
    view_ce = view_reg = 0.0
    for m in range(model.m):
        present = batch.mask[:, m]
        ce, reg, _ = view_terms[m]
        view_ce += float(np.sum(ce * present)) / n
        view_reg += float(np.sum(reg * present)) / n
    loss += view_ce + lam * view_reg
    breakdown["view_ce"] = view_ce
    breakdown["view_reg"] = view_reg
    if model.use_pseudo:
        ce, reg, _ = pseudo_terms
        breakdown["pseudo_ce"] = float(np.mean(ce))
        breakdown["pseudo_reg"] = float(np.mean(reg))
        loss += breakdown["pseudo_ce"] + lam * breakdown["pseudo_reg"]

    if not want_grads:
        return loss, breakdown, None, result

    # Backward through the fused head into the fold.
    cur_b, cur_u, alpha_fused = caches["fused"]
    g_alpha_f = g_fused / n
    s_f = model.k / cur_u
    gb = g_alpha_f * s_f[:, None]
    gu = -(g_alpha_f * cur_b).sum(axis=1) * model.k / (cur_u * cur_u)
    g_views_bu = [None] * model.m
    for idx in range(len(caches["stages"]) - 1, -1, -1):
        gb, gu, gb2, gu2 = _combine_batch_vjp(caches["stages"][idx], gb, gu)
        g_views_bu[idx + 1] = (gb2, gu2)
    g_views_bu[0] = (gb, gu)

    grads = []
    for m, net in enumerate(model.view_nets):
        info = caches["views"][m]
        present = batch.mask[:, m]
        gb_m, gu_m = g_views_bu[m]
        g_alpha = _alpha_grad_from_opinion(
            info["alpha"], gb_m * present[:, None], gu_m * present
        )
        g_alpha += view_terms[m][2] * present[:, None] / n
        gz = g_alpha * _sigmoid(info["z"])
        grads.append(net.backward(info["cache"], gz))
    if model.use_pseudo:
        info = caches["pseudo"]
        gz = (pseudo_terms[2] / n) * _sigmoid(info["z"])
        grads.append(model.pseudo_net.backward(info["cache"], gz))
    return loss, breakdown, grads, result


def total_loss(model, batch, cfg: TrainConfig, epoch: int):
    """Mean per-sample loss and its per-term breakdown."""
    loss, breakdown, _, _ = _loss_and_grads(model, batch, cfg, epoch, want_grads=False)
    return loss, breakdown


def loss_gradients(model, batch, cfg: TrainConfig, epoch: int):
    """Loss, breakdown, and exact gradients for every network parameter."""
    loss, breakdown, grads, _ = _loss_and_grads(model, batch, cfg, epoch)
    return loss, breakdown, grads


# --- training ----------------------------------------------------------------


class _Adam:
    def __init__(self, nets, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.state = [
            {name: (np.zeros_like(getattr(net, name)), np.zeros_like(getattr(net, name)))
             for name in net.param_names()}
            for net in nets
        ]

    def step(self, nets, grads):
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for net, gdict, sdict in zip(nets, grads, self.state):
            for name in net.param_names():
                g = gdict[name]
                m, v = sdict[name]
                m = self.beta1 * m + (1.0 - self.beta1) * g
                v = self.beta2 * v + (1.0 - self.beta2) * g * g
                sdict[name] = (m, v)
                p = getattr(net, name)
                p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def train(dataset: MultiViewBatch, cfg: TrainConfig):
    """Gradient-descent training; returns the model and a per-epoch trace."""
    rng = np.random.default_rng(cfg.seed)
    k = int(dataset.labels.max()) + 1
    if k < 2:
        raise ValueError("need at least two classes in the labels")
    model = EvidentialModel.create(rng, dataset.dims, k, cfg.hidden, cfg.use_pseudo)
    optimizer = _Adam(model.all_nets(), cfg.learning_rate)
    trace = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(dataset.n)
        epoch_loss = 0.0
        for bi, start in enumerate(range(0, dataset.n, cfg.batch_size)):
            idx = order[start : start + cfg.batch_size]
            sub = dataset.take(idx)
            loss, breakdown, grads, _ = _loss_and_grads(model, sub, cfg, epoch)
            if not np.isfinite(loss):
                term = next(
                    (name for name, v in breakdown.items() if not np.isfinite(v)),
                    "loss",
                )
                raise NonFiniteLossError(epoch, bi, term, loss)
            optimizer.step(model.all_nets(), grads)
            epoch_loss += loss * idx.size
        result = forward(model, dataset)
        acc = float(np.mean(np.argmax(result.beliefs_fused, axis=1) == dataset.labels))
        trace.append(
            {
                "epoch": epoch,
                "loss": epoch_loss / dataset.n,
                "accuracy": acc,
                "lambda": cfg.lambda_at(epoch),
            }
        )
    return model, trace


# --- prediction --------------------------------------------------------------


@dataclass
class PredictResult:
    labels: np.ndarray
    beliefs: np.ndarray
    uncertainty: np.ndarray
    probabilities: np.ndarray
    low_confidence: np.ndarray
    m_true: np.ndarray | None = None
    smoothed: np.ndarray | None = None


def predict(
    model: EvidentialModel,
    batch: MultiViewBatch,
    use_kalman: bool = False,
    kalman_params=None,
) -> PredictResult:
    """Fused labels and opinions; optional Kalman-smoothed belief stream.

    Labels are the argmax of fused belief with ties broken toward the lowest
    class index; a vacuous fused opinion falls back to the argmax of the
    fused concentration and is flagged low-confidence.  With ``use_kalman``
    the per-sample stream of combined "true" masses (belief = 1 - u against
    the maximum fused probability) is filtered and reported alongside; the
    hard labels are unchanged.
    """
    result = forward(model, batch)
    b, u = result.beliefs_fused, result.u_fused
    labels = np.argmax(b, axis=1)
    low_conf = u >= 1.0 - 1e-12
    if low_conf.any():
        labels = labels.copy()
        labels[low_conf] = np.argmax(result.alpha_fused[low_conf], axis=1)
    probs = result.alpha_fused / result.alpha_fused.sum(axis=1, keepdims=True)
    out = PredictResult(labels, b, u, probs, low_conf)
    if use_kalman:
        from .evidence import ds_bpa

        kp = kalman_params or {}
        m_true = np.array(
            [
                ds_bpa(1.0 - float(u[i]), float(probs[i].max())).m_true
                for i in range(batch.n)
            ]
        )
        init = KalmanState(
            x_hat=float(kp.get("x0", m_true[0])),
            p_var=float(kp.get("p0", 1.0)),
            q_var=float(kp.get("q", 1e-4)),
            r_var=float(kp.get("r", 1e-2)),
        )
        trace, _ = filter_sequence(init, m_true)
        out.m_true = m_true
        out.smoothed = trace[:, 0]
    return out


# --- serialization -----------------------------------------------------------

_MAGIC = b"KPHD"
_VERSION = 1


def save_model(model: EvidentialModel, path):
    """Flat binary container: KPHD magic, version, dims, float64 params."""
    nets = model.all_nets()
    hidden = nets[0].hidden
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(
            struct.pack(
                "<IIIII", _VERSION, model.k, model.m, len(nets), hidden
            )
        )
        for net in nets:
            fh.write(struct.pack("<I", net.d_in))
        for net in nets:
            for name in net.param_names():
                arr = np.ascontiguousarray(getattr(net, name), dtype="<f8")
                fh.write(arr.tobytes())


def load_model(path) -> EvidentialModel:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError("not a model container (bad magic)")
        version, k, m, n_nets, hidden = struct.unpack("<IIIII", fh.read(20))
        if version != _VERSION:
            raise ValueError(f"unsupported container version {version}")
        d_ins = [struct.unpack("<I", fh.read(4))[0] for _ in range(n_nets)]

        def read_arr(shape):
            count = int(np.prod(shape))
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise ValueError("truncated model container")
            return np.frombuffer(buf, dtype="<f8").reshape(shape).copy()

        nets = []
        for d in d_ins:
            if hidden > 0:
                nets.append(
                    ViewNetwork(
                        read_arr((d, hidden)),
                        read_arr((hidden,)),
                        read_arr((hidden, k)),
                        read_arr((k,)),
                    )
                )
            else:
                nets.append(ViewNetwork(read_arr((d, k)), read_arr((k,))))
    if n_nets == m + 1:
        return EvidentialModel(nets[:-1], nets[-1], k)
    return EvidentialModel(nets, None, k)
