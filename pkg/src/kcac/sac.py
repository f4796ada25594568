"""Soft actor-critic over continuous actions, written against numpy.

The actor is a tanh-squashed diagonal Gaussian; two Q critics with slowly
tracking target copies provide the clipped double-Q Bellman target; the
entropy temperature is learned towards a target entropy. Gradients are
derived by hand (see :func:`critic_loss_grad` and :func:`actor_loss_grad`)
and checked against central finite differences by :func:`grad_check`.

Every network stores its weights in one flat float64 buffer; layer matrices
are views into it. That makes Adam, Polyak averaging, export and hashing
single-array operations.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import ConfigurationError, KcacError, TransferError

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
BLOB_VERSION = "kcac-params/1"
_BLOB_MAGIC = b"KCACPB01"


class DivergenceError(KcacError, FloatingPointError):
    pass


@dataclass(frozen=True)
class LearnerParams:
    learning_rate: float
    tau: float
    entropy_coeff: float
    batch_size: int
    buffer_size: int
    discount: float = 0.95
    target_entropy: str | float = "auto"

    def __post_init__(self):
        for name in ("learning_rate", "entropy_coeff"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigurationError(f"must be > 0, got {v!r}", name)
        # tau = 0 (frozen targets) and tau = 1 (hard copy) are legal limits
        if not (0.0 <= self.tau <= 1.0):
            raise ConfigurationError(f"must lie in [0, 1], got {self.tau!r}", "tau")
        if not (0.0 < self.discount < 1.0):
            raise ConfigurationError(f"must lie in (0, 1), got {self.discount!r}", "discount")
        if int(self.batch_size) != self.batch_size or self.batch_size < 1:
            raise ConfigurationError(f"must be a positive integer, got {self.batch_size!r}", "batch_size")
        if int(self.buffer_size) != self.buffer_size or self.buffer_size < self.batch_size:
            raise ConfigurationError("buffer_size must be an integer >= batch_size", "buffer_size")
        object.__setattr__(self, "batch_size", int(self.batch_size))
        object.__setattr__(self, "buffer_size", int(self.buffer_size))
        te = self.target_entropy
        if isinstance(te, str):
            if te.lower() != "auto":
                raise ConfigurationError(f"must be 'auto' or a number, got {te!r}", "target_entropy")
            object.__setattr__(self, "target_entropy", "auto")
        elif not math.isfinite(float(te)):
            raise ConfigurationError("must be finite", "target_entropy")

    def resolved_target_entropy(self, act_dim: int) -> float:
        return -float(act_dim) if self.target_entropy == "auto" else float(self.target_entropy)

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "tau": self.tau,
            "entropy_coeff": self.entropy_coeff,
            "batch_size": self.batch_size,
            "buffer_size": self.buffer_size,
            "discount": self.discount,
            "target_entropy": self.target_entropy,
        }


@dataclass(frozen=True)
class SACSettings:
    """Architecture and cadence knobs that are not part of the tuned parameter sets."""

    hidden: tuple[int, ...] = (64, 64)
    learning_starts: int = 1000
    gradient_steps: int = 1
    adam_betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if any(h < 1 for h in self.hidden) or self.learning_starts < 0 or self.gradient_steps < 1:
            raise ConfigurationError("invalid SAC settings")


# --------------------------------------------------------------------------
# networks
# --------------------------------------------------------------------------


class MLP:
    """Fully connected net, tanh hidden layers, linear output, weights in ``self.flat``."""

    def __init__(self, sizes: Sequence[int], rng: np.random.Generator | None = None):
        self.sizes = tuple(int(s) for s in sizes)
        n = sum(a * b + b for a, b in zip(self.sizes[:-1], self.sizes[1:]))
        self.flat = np.zeros(n)
        self.layers: list[tuple[np.ndarray, np.ndarray]] = []
        self._slices: list[tuple[slice, slice]] = []
        pos = 0
        for a, b in zip(self.sizes[:-1], self.sizes[1:]):
            ws = slice(pos, pos + a * b)
            bs = slice(pos + a * b, pos + a * b + b)
            self.layers.append((self.flat[ws].reshape(a, b), self.flat[bs]))
            self._slices.append((ws, bs))
            pos += a * b + b
        if rng is not None:
            for W, bias in self.layers:
                bound = 1.0 / math.sqrt(W.shape[0])
                W[...] = rng.uniform(-bound, bound, W.shape)
                bias[...] = rng.uniform(-bound, bound, bias.shape)

    @property
    def n_params(self) -> int:
        return self.flat.size

    def copy(self) -> MLP:
        out = MLP(self.sizes)
        out.flat[:] = self.flat
        return out

    def named_tensors(self, prefix: str) -> list[tuple[str, np.ndarray]]:
        out = []
        for i, (W, b) in enumerate(self.layers):
            out.append((f"{prefix}.{i}.weight", W))
            out.append((f"{prefix}.{i}.bias", b))
        return out

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Returns the output and the per-layer inputs needed by :meth:`backward`."""
        acts = [x]
        h = x
        last = len(self.layers) - 1
        for i, (W, b) in enumerate(self.layers):
            h = kernels.dense(h, W, b) if i == last else kernels.dense_tanh(h, W, b)
            acts.append(h)
        return h, acts

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, acts: list[np.ndarray], gout: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Gradient of ``sum(gout * output)`` w.r.t. the flat parameters and the input."""
        grad = np.empty_like(self.flat)
        g = gout
        last = len(self.layers) - 1
        for i in range(last, -1, -1):
            W, _ = self.layers[i]
            if i == last:
                g_in, gW, gb = kernels.dense_backward(acts[i], W, g)
            else:
                g_in, gW, gb = kernels.dense_tanh_backward(acts[i], W, acts[i + 1], g)
            ws, bs = self._slices[i]
            grad[ws] = gW.ravel()
            grad[bs] = gb
            g = g_in
        return grad, g


def _squash_log_std(raw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    t = np.tanh(raw)
    half = 0.5 * (LOG_STD_MAX - LOG_STD_MIN)
    return LOG_STD_MIN + half * (t + 1.0), half * (1.0 - t * t)


def actor_head(out: np.ndarray, act_dim: int):
    """Split actor output into (mean, log_std, d log_std / d raw)."""
    mu = out[:, :act_dim]
    log_std, dls = _squash_log_std(out[:, act_dim:])
    return mu, log_std, dls


class Adam:
    def __init__(self, n: int, lr: float, betas=(0.9, 0.999), eps: float = 1e-8):
        self.m = np.zeros(n)
        self.v = np.zeros(n)
        self.t = 0
        self.lr, self.betas, self.eps = lr, betas, eps

    def step(self, params: np.ndarray, grad: np.ndarray) -> None:
        self.t += 1
        kernels.adam_step(params, grad, self.m, self.v, self.lr, self.betas[0], self.betas[1], self.eps, float(self.t))


# --------------------------------------------------------------------------
# losses and hand-derived gradients
# --------------------------------------------------------------------------


def critic_loss_grad(q: MLP, obs: np.ndarray, act: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """``0.5 * mean((Q(s, a) - y)^2)`` and its gradient w.r.t. ``q.flat``."""
    pred, acts = q.forward(np.concatenate([obs, act], axis=1))
    err = pred[:, 0] - y
    loss = 0.5 * float(np.mean(err * err))
    grad, _ = q.backward(acts, (err / err.size)[:, None])
    return loss, grad


def actor_loss_grad(
    actor: MLP, q1: MLP, q2: MLP, obs: np.ndarray, noise: np.ndarray, alpha: float
) -> tuple[float, np.ndarray, np.ndarray]:
    """``mean(alpha * log pi(a|s) - min(Q1, Q2)(s, a))`` with ``a`` reparameterized by ``noise``.

    Returns (loss, gradient w.r.t. ``actor.flat``, per-sample log-probs).
    """
    B, k = noise.shape
    out, acts = actor.forward(obs)
    mu, log_std, dls = actor_head(out, k)
    a, _, logp = kernels.squashed_sample(mu, log_std, noise)
    x = np.concatenate([obs, a], axis=1)
    v1, c1 = q1.forward(x)
    v2, c2 = q2.forward(x)
    use1 = (v1[:, 0] <= v2[:, 0]).astype(np.float64)[:, None]
    qmin = np.minimum(v1[:, 0], v2[:, 0])
    loss = float(np.mean(alpha * logp - qmin))
    # d(-qmin)/da through whichever critic is smaller
    _, gx1 = q1.backward(c1, -use1 / B)
    _, gx2 = q2.backward(c2, -(1.0 - use1) / B)
    ga = (gx1 + gx2)[:, obs.shape[1]:]
    std = np.exp(log_std)
    da_du = 1.0 - a * a
    g_mu = ga * da_du + (alpha / B) * 2.0 * a
    g_ls = ga * da_du * std * noise + (alpha / B) * (-1.0 + 2.0 * a * std * noise)
    grad, _ = actor.backward(acts, np.concatenate([g_mu, g_ls * dls], axis=1))
    return loss, grad, logp


# --------------------------------------------------------------------------
# replay
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Transition:
    observation: np.ndarray
    action: np.ndarray
    reward: float
    next_observation: np.ndarray
    terminal: bool = False


class ReplayBuffer:
    """FIFO ring buffer; storage grows geometrically up to ``capacity``."""

    def __init__(self, capacity: int, obs_dim: int, act_dim: int, rng: np.random.Generator):
        self.capacity = int(capacity)
        self.obs_dim, self.act_dim = obs_dim, act_dim
        self.rng = rng
        self._alloc = 0
        self._obs = np.empty((0, obs_dim))
        self._act = np.empty((0, act_dim))
        self._rew = np.empty(0)
        self._next = np.empty((0, obs_dim))
        self._done = np.empty(0)
        self._head = 0  # index of the oldest element once full
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def _grow(self) -> None:
        new = min(self.capacity, max(1024, 2 * self._alloc))
        for name in ("_obs", "_act", "_rew", "_next", "_done"):
            old = getattr(self, name)
            arr = np.empty((new,) + old.shape[1:])
            arr[: old.shape[0]] = old
            setattr(self, name, arr)
        self._alloc = new

    def add(self, t: Transition) -> None:
        obs = np.asarray(t.observation, dtype=np.float64)
        nxt = np.asarray(t.next_observation, dtype=np.float64)
        act = np.asarray(t.action, dtype=np.float64)
        if obs.shape != (self.obs_dim,) or nxt.shape != (self.obs_dim,) or act.shape != (self.act_dim,):
            raise ValueError(
                f"transition shapes {obs.shape}/{act.shape}/{nxt.shape} do not match "
                f"obs_dim={self.obs_dim}, act_dim={self.act_dim}"
            )
        if self.size < self.capacity:
            if self.size == self._alloc:
                self._grow()
            i = self.size
            self.size += 1
        else:
            i = self._head
            self._head = (self._head + 1) % self.capacity
        self._obs[i], self._act[i], self._rew[i] = obs, act, float(t.reward)
        self._next[i], self._done[i] = nxt, float(bool(t.terminal))

    def __getitem__(self, k: int) -> Transition:
        """k-th oldest stored transition."""
        if not 0 <= k < self.size:
            raise IndexError(k)
        i = (self._head + k) % self.capacity if self.size == self.capacity else k
        return Transition(self._obs[i].copy(), self._act[i].copy(), float(self._rew[i]), self._next[i].copy(), bool(self._done[i]))

    def sample(self, batch_size: int):
        idx = self.rng.choice(self.size, size=batch_size, replace=False)
        return self._obs[idx], self._act[idx], self._rew[idx], self._next[idx], self._done[idx]

    def clear(self) -> None:
        self.size = 0
        self._head = 0


# --------------------------------------------------------------------------
# parameter blobs
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ParamBlob:
    tensors: tuple[tuple[str, np.ndarray], ...]
    log_temperature: float
    meta: dict = field(default_factory=dict)
    version: str = BLOB_VERSION

    @property
    def temperature(self) -> float:
        return math.exp(self.log_temperature)

    def to_bytes(self) -> bytes:
        entries, chunks, offset = [], [], 0
        for name, arr in self.tensors:
            data = np.ascontiguousarray(arr, dtype="<f8").tobytes()
            entries.append({"name": name, "shape": list(arr.shape), "offset": offset, "nbytes": len(data)})
            chunks.append(data)
            offset += len(data)
        header = json.dumps(
            {
                "version": self.version,
                "meta": self.meta,
                "log_temperature": float(self.log_temperature).hex(),
                "tensors": entries,
            },
            sort_keys=True,
            separators=(",", ":"),
        ).encode()
        return _BLOB_MAGIC + struct.pack("<I", len(header)) + header + b"".join(chunks)

    @classmethod
    def from_bytes(cls, data: bytes) -> ParamBlob:
        if data[:8] != _BLOB_MAGIC:
            raise TransferError("not a kcac parameter blob")
        (hlen,) = struct.unpack("<I", data[8:12])
        header = json.loads(data[12 : 12 + hlen])
        body = data[12 + hlen :]
        tensors = []
        for e in header["tensors"]:
            raw = body[e["offset"] : e["offset"] + e["nbytes"]]
            arr = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(e["shape"])
            tensors.append((e["name"], arr))
        return cls(tuple(tensors), float.fromhex(header["log_temperature"]), header["meta"], header["version"])

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(self.to_bytes())
        return path

    @classmethod
    def load(cls, path: str | Path) -> ParamBlob:
        return cls.from_bytes(Path(path).read_bytes())

    def sha256(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()

    def theta_hash(self) -> str:
        """Hash of the network tensors alone (names, shapes, values); the temperature is excluded."""
        h = hashlib.sha256()
        for name, arr in self.tensors:
            h.update(name.encode())
            h.update(repr(tuple(arr.shape)).encode())
            h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        return h.hexdigest()


# --------------------------------------------------------------------------
# learner
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LossReport:
    critic_loss: float
    actor_loss: float
    temperature_loss: float
    entropy_estimate: float

    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in (self.critic_loss, self.actor_loss, self.temperature_loss, self.entropy_estimate))


class SACLearner:
    def __init__(
        self,
        obs_dim: int,
        act_dim: int,
        params: LearnerParams,
        seed: int,
        settings: SACSettings | None = None,
    ):
        if obs_dim < 1 or act_dim < 1:
            raise ConfigurationError("obs_dim and act_dim must be >= 1")
        if not isinstance(params, LearnerParams):
            raise ConfigurationError(f"expected LearnerParams, got {type(params).__name__}")
        self.obs_dim, self.act_dim = int(obs_dim), int(act_dim)
        self.params = params
        self.settings = settings or SACSettings()
        self.seed = seed
        init_ss, act_ss, replay_ss, update_ss = np.random.SeedSequence(seed).spawn(4)
        init_rng = np.random.default_rng(init_ss)
        self._act_rng = np.random.default_rng(act_ss)
        self._update_rng = np.random.default_rng(update_ss)
        hidden = self.settings.hidden
        self.actor = MLP((obs_dim, *hidden, 2 * act_dim), init_rng)
        self.q1 = MLP((obs_dim + act_dim, *hidden, 1), init_rng)
        self.q2 = MLP((obs_dim + act_dim, *hidden, 1), init_rng)
        self.q1_target = self.q1.copy()
        self.q2_target = self.q2.copy()
        self.log_alpha = np.array([math.log(params.entropy_coeff)])
        self.target_entropy = params.resolved_target_entropy(act_dim)
        self.buffer = ReplayBuffer(params.buffer_size, obs_dim, act_dim, np.random.default_rng(replay_ss))
        self._reset_optimizers()
        self.steps_seen = 0
        self.updates = 0
        self.pretrained = False

    def _reset_optimizers(self) -> None:
        lr, betas, eps = self.params.learning_rate, self.settings.adam_betas, self.settings.adam_eps
        self.actor_opt = Adam(self.actor.n_params, lr, betas, eps)
        self.q1_opt = Adam(self.q1.n_params, lr, betas, eps)
        self.q2_opt = Adam(self.q2.n_params, lr, betas, eps)
        self.alpha_opt = Adam(1, lr, betas, eps)

    @property
    def alpha(self) -> float:
        return math.exp(float(self.log_alpha[0]))

    # -- acting ------------------------------------------------------------

    def select_action(self, obs, deterministic: bool = False) -> np.ndarray:
        x = np.asarray(obs, dtype=np.float64).reshape(1, -1)
        if x.shape[1] != self.obs_dim:
            raise ValueError(f"observation has {x.shape[1]} entries, expected {self.obs_dim}")
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite observation")
        mu, log_std, _ = actor_head(self.actor(x), self.act_dim)
        if deterministic:
            return np.tanh(mu[0])
        noise = self._act_rng.standard_normal(mu.shape)
        a, _, _ = kernels.squashed_sample(mu, log_std, noise)
        return a[0]

    def act(self, obs) -> np.ndarray:
        """Training-time action: uniform exploration during warmup of an untrained learner, policy samples after."""
        if not self.pretrained and self.steps_seen < self.settings.learning_starts:
            return self._act_rng.uniform(-1.0, 1.0, self.act_dim)
        return self.select_action(obs)

    def log_prob(self, obs, action) -> np.ndarray:
        """Log-density of given actions; actions are pulled into the open interval before ``atanh``."""
        x = np.atleast_2d(np.asarray(obs, dtype=np.float64))
        a = np.clip(np.atleast_2d(np.asarray(action, dtype=np.float64)), -1.0 + 1e-6, 1.0 - 1e-6)
        mu, log_std, _ = actor_head(self.actor(x), self.act_dim)
        noise = (np.arctanh(a) - mu) / np.exp(log_std)
        return kernels.squashed_sample(mu, log_std, noise)[2]

    # -- learning ----------------------------------------------------------

    def observe_transition(self, t: Transition) -> None:
        self.buffer.add(t)
        self.steps_seen += 1

    @property
    def ready(self) -> bool:
        n = len(self.buffer)
        return n >= self.params.batch_size and n >= self.settings.learning_starts

    def update(self) -> LossReport | None:
        """One SAC step; ``None`` (and no state change) until enough data is buffered."""
        if not self.ready:
            return None
        p = self.params
        obs, act, rew, nxt, done = self.buffer.sample(p.batch_size)
        B = obs.shape[0]
        noise_pi = self._update_rng.standard_normal((B, self.act_dim))
        noise_next = self._update_rng.standard_normal((B, self.act_dim))

        # temperature, using log-probs of fresh policy samples
        mu, log_std, _ = actor_head(self.actor(obs), self.act_dim)
        _, _, logp = kernels.squashed_sample(mu, log_std, noise_pi)
        gap = logp + self.target_entropy
        temp_loss = -float(self.log_alpha[0] * np.mean(gap))
        self.alpha_opt.step(self.log_alpha, np.array([-float(np.mean(gap))]))
        alpha = self.alpha

        # critics
        mu2, ls2, _ = actor_head(self.actor(nxt), self.act_dim)
        a2, _, logp2 = kernels.squashed_sample(mu2, ls2, noise_next)
        x2 = np.concatenate([nxt, a2], axis=1)
        q_next = np.minimum(self.q1_target(x2)[:, 0], self.q2_target(x2)[:, 0]) - alpha * logp2
        y = rew + p.discount * (1.0 - done) * q_next
        l1, g1 = critic_loss_grad(self.q1, obs, act, y)
        l2, g2 = critic_loss_grad(self.q2, obs, act, y)
        self.q1_opt.step(self.q1.flat, g1)
        self.q2_opt.step(self.q2.flat, g2)

        # actor against the freshly updated critics
        actor_loss, ga, logp_pi = actor_loss_grad(self.actor, self.q1, self.q2, obs, noise_pi, alpha)
        self.actor_opt.step(self.actor.flat, ga)

        kernels.soft_update(self.q1_target.flat, self.q1.flat, p.tau)
        kernels.soft_update(self.q2_target.flat, self.q2.flat, p.tau)
        self.updates += 1

        report = LossReport(l1 + l2, actor_loss, temp_loss, -float(np.mean(logp_pi)))
        if not report.is_finite():
            raise DivergenceError(f"non-finite losses after update {self.updates}: {report}")
        return report

    # -- transfer ----------------------------------------------------------

    def _meta(self) -> dict:
        return {"obs_dim": self.obs_dim, "act_dim": self.act_dim, "hidden": list(self.settings.hidden)}

    def export_params(self) -> ParamBlob:
        tensors = []
        for prefix, net in (
            ("actor", self.actor),
            ("q1", self.q1),
            ("q2", self.q2),
            ("q1_target", self.q1_target),
            ("q2_target", self.q2_target),
        ):
            tensors.extend((name, arr.copy()) for name, arr in net.named_tensors(prefix))
        return ParamBlob(tuple(tensors), float(self.log_alpha[0]), self._meta())

    def import_params(self, blob: ParamBlob, temperature: bool = True) -> None:
        """Overwrite all networks (and, unless disabled, the temperature) from ``blob``.

        Optimizer moments restart from zero; the replay buffer is untouched.
        """
        if blob.version != BLOB_VERSION:
            raise TransferError(f"blob version {blob.version!r} != {BLOB_VERSION!r}")
        if blob.meta != self._meta():
            raise TransferError(f"blob built for {blob.meta}, learner is {self._meta()}")
        mine = self.export_params().tensors
        if [n for n, _ in blob.tensors] != [n for n, _ in mine] or any(
            a.shape != b.shape for (_, a), (_, b) in zip(blob.tensors, mine)
        ):
            raise TransferError("blob tensor layout does not match the learner")
        it = iter(blob.tensors)
        for net in (self.actor, self.q1, self.q2, self.q1_target, self.q2_target):
            for W, b in net.layers:
                W[...] = next(it)[1]
                b[...] = next(it)[1]
        if temperature:
            self.log_alpha[0] = blob.log_temperature
        self._reset_optimizers()
        self.pretrained = True


# --------------------------------------------------------------------------
# gradient verification
# --------------------------------------------------------------------------


def _rel_error(analytic: np.ndarray, numeric: np.ndarray, floor: float) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom)) if analytic.size else 0.0


def finite_difference(loss: Callable[[], float], flat: np.ndarray, epsilon: float) -> np.ndarray:
    """Central differences of ``loss`` w.r.t. every entry of ``flat`` (perturbed in place, restored)."""
    out = np.empty_like(flat)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + epsilon
        up = loss()
        flat[i] = keep - epsilon
        down = loss()
        flat[i] = keep
        out[i] = (up - down) / (2.0 * epsilon)
    return out


def grad_check(
    epsilon: float = 1e-5,
    seed: int = 0,
    *,
    zero_weights: bool = False,
    perturb: Callable[[str, np.ndarray], np.ndarray] | None = None,
    floor: float = 1e-6,
) -> float:
    """Max relative error between hand-derived and finite-difference gradients.

    Uses a 2-4-1 critic and a 1-4-2 actor (one observation and one action
    dimension) on a fixed batch of eight samples. ``zero_weights`` zeroes
    every weight, the regression targets and the temperature, so all
    gradients vanish. ``perturb(name, grad)`` lets tests corrupt an analytic
    gradient ("critic" or "actor") to prove the check catches it.
    """
    rng = np.random.default_rng(seed)
    obs_dim, act_dim, B = 1, 1, 8
    critic = MLP((obs_dim + act_dim, 4, 1), rng)
    other = MLP((obs_dim + act_dim, 4, 1), rng)
    actor = MLP((obs_dim, 4, 2 * act_dim), rng)
    obs = rng.uniform(-1.0, 1.0, (B, obs_dim))
    act = rng.uniform(-0.9, 0.9, (B, act_dim))
    y = rng.standard_normal(B)
    noise = rng.standard_normal((B, act_dim))
    alpha = 0.2
    if zero_weights:
        for net in (critic, other, actor):
            net.flat[:] = 0.0
        y[:] = 0.0
        alpha = 0.0

    _, g_critic = critic_loss_grad(critic, obs, act, y)
    n_critic = finite_difference(lambda: critic_loss_grad(critic, obs, act, y)[0], critic.flat, epsilon)
    _, g_actor, _ = actor_loss_grad(actor, critic, other, obs, noise, alpha)
    n_actor = finite_difference(
        lambda: actor_loss_grad(actor, critic, other, obs, noise, alpha)[0], actor.flat, epsilon
    )
    if perturb is not None:
        g_critic = perturb("critic", g_critic.copy())
        g_actor = perturb("actor", g_actor.copy())
    return max(_rel_error(g_critic, n_critic, floor), _rel_error(g_actor, n_actor, floor))
