"""Conditional sequence VAE with a structurally split latent code.

The encoder is a single-layer bidirectional GRU over 32 steps; each step
consumes the melody one-hot concatenated with the chord chromagram. Its two
final states project linearly to the posterior mean and log-variance. The
latent z = concat[z_r, z_p] splits into equal halves: the first half drives
a small rhythm decoder (3-way logits per step), the second half, together
with the rhythm sequence and the chord, drives the stacked-GRU melody
decoder (130-way logits per step). Cross-entropy on both outputs plus a
closed-form KL to a standard-normal prior make up the objective; the rhythm
term is what ties the first half of z to rhythm and nothing else.

A "vanilla" mode removes the rhythm decoder and feeds the full latent to
the melody decoder; it exists as a baseline toggle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .corpus import Batch, one_hot
from .sequences import CHORD_DIM, MELODY_VOCAB, RHYTHM_VOCAB, SEQ_LEN

ENC_IN = MELODY_VOCAB + CHORD_DIM  # 142 per encoder step

MODES = ("ec2", "vanilla")
RHYTHM_FEEDS = ("teacher", "soft", "greedy")


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class HyperParams:
    """Architecture sizes. ``z_dim`` must be even; the halves are equal."""

    z_dim: int = 256
    enc_hidden: int = 512
    rhythm_hidden: int = 256
    global_hidden: int = 512
    global_layers: int = 2
    teacher_forcing_rate: float = 1.0
    mode: str = "ec2"

    def __post_init__(self):
        if self.z_dim < 2 or self.z_dim % 2:
            raise ModelError(f"z_dim must be even and positive, got {self.z_dim}")
        for name in ("enc_hidden", "rhythm_hidden", "global_hidden", "global_layers"):
            if getattr(self, name) < 1:
                raise ModelError(f"{name} must be >= 1")
        if not 0.0 <= self.teacher_forcing_rate <= 1.0:
            raise ModelError("teacher_forcing_rate must be in [0, 1]")
        if self.mode not in MODES:
            raise ModelError(f"mode must be one of {MODES}, got {self.mode!r}")

    @property
    def z_half(self) -> int:
        return self.z_dim // 2


@dataclass(frozen=True)
class LatentCode:
    """A single latent vector with its rhythm-first structural split."""

    z: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.z, dtype=np.float64)
        if arr.ndim != 1 or arr.size % 2:
            raise ModelError(f"latent must be a flat even-length vector, got {arr.shape}")
        object.__setattr__(self, "z", arr)

    @property
    def z_r(self) -> np.ndarray:
        return self.z[: self.z.size // 2]

    @property
    def z_p(self) -> np.ndarray:
        return self.z[self.z.size // 2 :]

    @classmethod
    def join(cls, z_r: np.ndarray, z_p: np.ndarray) -> "LatentCode":
        if z_r.shape != z_p.shape:
            raise ModelError(f"halves differ: {z_r.shape} vs {z_p.shape}")
        return cls(z=np.concatenate([z_r, z_p]))


def _gru_shapes(prefix: str, in_dim: int, hidden: int) -> dict[str, tuple]:
    return {
        f"{prefix}.wx": (in_dim, 3 * hidden),
        f"{prefix}.bx": (3 * hidden,),
        f"{prefix}.uh": (hidden, 3 * hidden),
    }


class ModelParams:
    """All named parameter arrays, with shapes fixed by the HyperParams."""

    def __init__(self, hyper: HyperParams, values: dict[str, np.ndarray]):
        expected = self.shape_map(hyper)
        if set(values) != set(expected):
            missing = sorted(set(expected) - set(values))
            extra = sorted(set(values) - set(expected))
            raise ModelError(f"parameter names mismatch: missing={missing} extra={extra}")
        for name, shape in expected.items():
            if values[name].shape != shape:
                raise ModelError(
                    f"parameter {name!r}: shape {values[name].shape}, expected {shape}"
                )
        self.hyper = hyper
        self.values = {name: np.asarray(values[name], dtype=np.float64)
                       for name in expected}

    @staticmethod
    def shape_map(hyper: HyperParams) -> dict[str, tuple]:
        h = hyper
        shapes: dict[str, tuple] = {}
        shapes.update(_gru_shapes("enc_fw", ENC_IN, h.enc_hidden))
        shapes.update(_gru_shapes("enc_bw", ENC_IN, h.enc_hidden))
        shapes["head_mu.w"] = (2 * h.enc_hidden, h.z_dim)
        shapes["head_mu.b"] = (h.z_dim,)
        shapes["head_logvar.w"] = (2 * h.enc_hidden, h.z_dim)
        shapes["head_logvar.b"] = (h.z_dim,)
        # decoder input columns are ordered [prev token, chord, latent, rhythm]
        if h.mode == "ec2":
            shapes["rdec.init.w"] = (h.z_half, h.rhythm_hidden)
            shapes["rdec.init.b"] = (h.rhythm_hidden,)
            shapes.update(
                _gru_shapes("rdec.gru", RHYTHM_VOCAB + h.z_half, h.rhythm_hidden)
            )
            shapes["rdec.out.w"] = (h.rhythm_hidden, RHYTHM_VOCAB)
            shapes["rdec.out.b"] = (RHYTHM_VOCAB,)
            shapes["rdec.start"] = (RHYTHM_VOCAB,)
            dec_z = h.z_half
            l0_in = MELODY_VOCAB + CHORD_DIM + dec_z + RHYTHM_VOCAB
        else:
            dec_z = h.z_dim
            l0_in = MELODY_VOCAB + CHORD_DIM + dec_z
        shapes["gdec.init.w"] = (dec_z, h.global_layers * h.global_hidden)
        shapes["gdec.init.b"] = (h.global_layers * h.global_hidden,)
        for layer in range(h.global_layers):
            in_dim = l0_in if layer == 0 else h.global_hidden
            shapes.update(_gru_shapes(f"gdec.l{layer}", in_dim, h.global_hidden))
        shapes["gdec.out.w"] = (h.global_hidden, MELODY_VOCAB)
        shapes["gdec.out.b"] = (MELODY_VOCAB,)
        shapes["gdec.start"] = (MELODY_VOCAB,)
        return shapes

    @classmethod
    def init(cls, hyper: HyperParams, seed: int) -> "ModelParams":
        """Fan-in-uniform weights, zero biases and start tokens; seeded."""
        rng = np.random.default_rng(seed)
        values = {}
        for name, shape in cls.shape_map(hyper).items():
            if len(shape) == 2:
                values[name] = ad.uniform_fan_in(rng, shape[0], *shape)
            else:
                values[name] = np.zeros(shape)
        return cls(hyper, values)

    def copy(self) -> "ModelParams":
        return ModelParams(self.hyper, {k: v.copy() for k, v in self.values.items()})

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[name]


def lift(g: ad.Graph, params: ModelParams, requires_grad: bool = True) -> dict[str, ad.Tensor]:
    """Register every parameter as a graph leaf (once per graph)."""
    return {
        name: g.leaf(arr, requires_grad=requires_grad)
        for name, arr in params.values.items()
    }


def _gru(lifted, prefix) -> ad.GruParams:
    return ad.GruParams(
        wx=lifted[f"{prefix}.wx"], bx=lifted[f"{prefix}.bx"],
        uh=lifted[f"{prefix}.uh"],
    )


def _linear(lifted, prefix, x):
    return ad.add(ad.matmul(x, lifted[f"{prefix}.w"]), lifted[f"{prefix}.b"])


def encode(g: ad.Graph, lifted: dict, hyper: HyperParams,
           x: np.ndarray, c: np.ndarray) -> tuple[ad.Tensor, ad.Tensor]:
    """Posterior parameters (mu, log_var), each (B, z_dim)."""
    x = np.asarray(x, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if x.ndim != 3 or x.shape[1:] != (SEQ_LEN, MELODY_VOCAB):
        raise ad.ShapeError(f"encode: melody batch must be (B, 32, 130), got {x.shape}")
    if c.shape != (x.shape[0], SEQ_LEN, CHORD_DIM):
        raise ad.ShapeError(
            f"encode: chord batch {c.shape} does not match melody {x.shape}"
        )
    batch = x.shape[0]
    xc = np.concatenate([x, c], axis=2).transpose(1, 0, 2)  # (T, B, 142)
    h0 = g.leaf(np.zeros((batch, hyper.enc_hidden)), requires_grad=False)
    fw = ad.gru_sequence(_gru(lifted, "enc_fw"), h0, SEQ_LEN, const=xc)
    bw = ad.gru_sequence(_gru(lifted, "enc_bw"), h0, SEQ_LEN, const=xc[::-1])
    last = (SEQ_LEN - 1) * batch
    final = ad.concat(
        [ad.narrow_rows(fw, last, batch), ad.narrow_rows(bw, last, batch)]
    )
    return _linear(lifted, "head_mu", final), _linear(lifted, "head_logvar", final)


def reparameterize(g: ad.Graph, mu: ad.Tensor, log_var: ad.Tensor,
                   rng: np.random.Generator | None) -> ad.Tensor:
    """z = mu + exp(log_var / 2) * eps, with eps ~ N(0, I) from ``rng``.

    ``rng=None`` freezes eps at zero (z = mu), which is the deterministic
    path used for evaluation, metrics, and analogies.
    """
    if mu.shape != log_var.shape:
        raise ad.ShapeError(f"reparameterize: {mu.shape} vs {log_var.shape}")
    if rng is None:
        return mu
    eps = g.leaf(rng.standard_normal(mu.shape), requires_grad=False)
    sigma = ad.exp(ad.affine(log_var, 0.5))
    return ad.add(mu, ad.mul(sigma, eps))


def _broadcast_start(g, lifted, name, batch, width):
    zeros = g.leaf(np.zeros((batch, width)), requires_grad=False)
    return ad.add(zeros, lifted[name])


def decode_rhythm(g: ad.Graph, lifted: dict, hyper: HyperParams, z_r: ad.Tensor,
                  teacher: np.ndarray | None = None,
                  tf_draws: np.ndarray | None = None):
    """Roll the rhythm decoder for 32 steps.

    Feedback at step t is the ground-truth token t-1 when ``teacher`` is
    given and ``tf_draws[t]`` is true, else the argmax of the decoder's own
    previous logits. Returns (logits: list of (B, 3) tensors, tokens: (B, 32)).
    """
    batch = z_r.shape[0]
    h = ad.tanh(_linear(lifted, "rdec.init", z_r))
    gru = _gru(lifted, "rdec.gru")
    prev = _broadcast_start(g, lifted, "rdec.start", batch, RHYTHM_VOCAB)
    logits: list[ad.Tensor] = []
    tokens = np.zeros((batch, SEQ_LEN), dtype=np.int64)
    for t in range(SEQ_LEN):
        if t > 0:
            if teacher is not None and (tf_draws is None or tf_draws[t]):
                fed = one_hot(teacher[:, t - 1], RHYTHM_VOCAB)
            else:
                fed = one_hot(tokens[:, t - 1], RHYTHM_VOCAB)
            prev = g.leaf(fed, requires_grad=False)
        step = ad.gru_cell(ad.concat([prev, z_r]), h, gru)
        h = step
        out = _linear(lifted, "rdec.out", h)
        logits.append(out)
        tokens[:, t] = out.data.argmax(axis=1)
    return logits, tokens


def decode_melody(g: ad.Graph, lifted: dict, hyper: HyperParams, z_dec: ad.Tensor,
                  rhythm_inputs: list[ad.Tensor] | None, c: np.ndarray,
                  teacher: np.ndarray | None = None,
                  tf_draws: np.ndarray | None = None):
    """Roll the stacked melody decoder for 32 steps.

    ``z_dec`` is z_p in the split model and the full z in vanilla mode (then
    ``rhythm_inputs`` must be None). Each step consumes the previous melody
    token (teacher-forced or self-fed), the step's rhythm input and chord
    frame, and ``z_dec``. Returns (logits, tokens) like ``decode_rhythm``.
    """
    if (rhythm_inputs is None) != (hyper.mode == "vanilla"):
        raise ModelError("rhythm_inputs must be given exactly in ec2 mode")
    batch = z_dec.shape[0]
    init = ad.tanh(_linear(lifted, "gdec.init", z_dec))
    hs = [
        ad.narrow(init, layer * hyper.global_hidden, hyper.global_hidden)
        for layer in range(hyper.global_layers)
    ]
    grus = [_gru(lifted, f"gdec.l{layer}") for layer in range(hyper.global_layers)]
    prev = _broadcast_start(g, lifted, "gdec.start", batch, MELODY_VOCAB)
    logits: list[ad.Tensor] = []
    tokens = np.zeros((batch, SEQ_LEN), dtype=np.int64)
    for t in range(SEQ_LEN):
        if t > 0:
            if teacher is not None and (tf_draws is None or tf_draws[t]):
                fed = one_hot(teacher[:, t - 1], MELODY_VOCAB)
            else:
                fed = one_hot(tokens[:, t - 1], MELODY_VOCAB)
            prev = g.leaf(fed, requires_grad=False)
        c_t = g.leaf(c[:, t, :], requires_grad=False)
        parts = [prev, c_t, z_dec] + (
            [rhythm_inputs[t]] if rhythm_inputs is not None else []
        )
        x_in = ad.concat(parts)
        for layer in range(hyper.global_layers):
            hs[layer] = ad.gru_cell(x_in, hs[layer], grus[layer])
            x_in = hs[layer]
        out = _linear(lifted, "gdec.out", hs[-1])
        logits.append(out)
        tokens[:, t] = out.data.argmax(axis=1)
    return logits, tokens


def _mean_ce(logits: list[ad.Tensor], targets: np.ndarray) -> ad.Tensor:
    batch = targets.shape[0]
    total = None
    for t, lg in enumerate(logits):
        s = ad.reduce_sum(ad.cross_entropy(lg, targets[:, t]))
        total = s if total is None else ad.add(total, s)
    return ad.affine(total, 1.0 / (batch * SEQ_LEN))


def kl_standard_normal(g: ad.Graph, mu: ad.Tensor, log_var: ad.Tensor) -> ad.Tensor:
    """Closed-form KL(N(mu, sigma^2) || N(0, I)), averaged over the batch."""
    batch = mu.shape[0]
    inner = ad.add(
        ad.affine(log_var, 1.0, 1.0),
        ad.affine(ad.add(ad.mul(mu, mu), ad.exp(log_var)), -1.0),
    )
    return ad.affine(ad.reduce_sum(inner), -0.5 / batch)


@dataclass
class LossOutput:
    """Scalar loss nodes plus the intermediate tensors tests inspect."""

    graph: ad.Graph
    total: ad.Tensor
    melody_ce: ad.Tensor
    rhythm_ce: ad.Tensor | None
    kl: ad.Tensor
    beta: float
    mu: ad.Tensor
    log_var: ad.Tensor
    z: ad.Tensor
    melody_logits: np.ndarray = field(repr=False, default=None)  # (B, 32, 130)
    rhythm_logits: np.ndarray = field(repr=False, default=None)  # (B, 32, 3)
    melody_pred: np.ndarray = field(repr=False, default=None)
    rhythm_pred: np.ndarray = field(repr=False, default=None)

    @property
    def total_value(self) -> float:
        return float(self.total.data)

    @property
    def melody_ce_value(self) -> float:
        return float(self.melody_ce.data)

    @property
    def rhythm_ce_value(self) -> float:
        return float(self.rhythm_ce.data) if self.rhythm_ce is not None else 0.0

    @property
    def kl_value(self) -> float:
        return float(self.kl.data)

    def melody_accuracy(self, targets: np.ndarray) -> float:
        return float((self.melody_pred == targets).mean())

    def rhythm_accuracy(self, targets: np.ndarray) -> float:
        if self.rhythm_pred is None:
            return 0.0
        return float((self.rhythm_pred == targets).mean())


def loss(batch: Batch, params: ModelParams, rng: np.random.Generator | None,
         beta: float = 1.0, tf_rate: float | None = None,
         mode: str | None = None, rhythm_feed: str = "teacher") -> LossOutput:
    """Build the full training graph for one batch and return its losses.

    ``total = melody_ce + rhythm_ce + beta * kl`` (the rhythm term is absent
    in vanilla mode). ``rhythm_feed`` picks what the melody decoder sees:
    the ground-truth rhythm one-hots ("teacher", the variant whose bound is
    tight), the rhythm decoder's per-step softmax ("soft", lets gradients
    reach the rhythm half through the melody loss), or its argmax ("greedy",
    the inference path). ``rng`` drives eps and the per-step teacher-forcing
    draws; pass None for the deterministic z = mu evaluation path.
    """
    hyper = params.hyper
    mode = mode or hyper.mode
    if mode != hyper.mode:
        raise ModelError(f"mode {mode!r} does not match params mode {hyper.mode!r}")
    if rhythm_feed not in RHYTHM_FEEDS:
        raise ModelError(f"rhythm_feed must be one of {RHYTHM_FEEDS}")
    tf_rate = hyper.teacher_forcing_rate if tf_rate is None else tf_rate

    g = ad.Graph()
    lifted = lift(g, params)
    mu, log_var = encode(g, lifted, hyper, batch.x, batch.c)
    z = reparameterize(g, mu, log_var, rng)
    kl = kl_standard_normal(g, mu, log_var)
    full_tf = rng is None or tf_rate >= 1.0
    if full_tf:
        builder = _decode_losses_fused
    else:
        builder = _decode_losses_stepwise
    melody_ce, rhythm_ce, aux = builder(
        g, lifted, hyper, batch, z, rng, tf_rate, rhythm_feed
    )
    if rhythm_ce is not None:
        total = ad.add(ad.add(melody_ce, rhythm_ce), ad.affine(kl, beta))
    else:
        total = ad.add(melody_ce, ad.affine(kl, beta))
    return LossOutput(
        graph=g, total=total, melody_ce=melody_ce, rhythm_ce=rhythm_ce, kl=kl,
        beta=beta, mu=mu, log_var=log_var, z=z, **aux,
    )


def _step_major(arr: np.ndarray) -> np.ndarray:
    """(B, T, D) -> (T, B, D) view."""
    return arr.transpose(1, 0, 2)


def _shifted_prev(onehots: np.ndarray, width: int) -> np.ndarray:
    """Step-major previous-token inputs: zeros at t=0 (start vector's slot)."""
    steps, batch = onehots.shape[1], onehots.shape[0]
    prev = np.zeros((steps, batch, width))
    prev[1:] = _step_major(onehots)[:-1]
    return prev


def _decode_losses_fused(g, lifted, hyper, batch, z, rng, tf_rate, rhythm_feed):
    """Fully teacher-forced decoding with whole-sequence GRU nodes."""
    steps, batch_n = SEQ_LEN, batch.x.shape[0]

    def head_and_ce(prefix, out_flat, targets, vocab):
        logits = _linear(lifted, prefix, out_flat)
        flat_targets = targets.T.reshape(-1)
        ce = ad.reduce_mean(ad.cross_entropy(logits, flat_targets))
        tokens = logits.data.argmax(axis=1).reshape(steps, batch_n).T
        cube = logits.data.reshape(steps, batch_n, vocab).transpose(1, 0, 2)
        return logits, ce, tokens, cube

    aux = {}
    if hyper.mode == "ec2":
        z_r = ad.narrow(z, 0, hyper.z_half)
        z_p = ad.narrow(z, hyper.z_half, hyper.z_half)
        h0_r = ad.tanh(_linear(lifted, "rdec.init", z_r))
        r_out = ad.gru_sequence(
            _gru(lifted, "rdec.gru"), h0_r, steps,
            const=_shifted_prev(batch.r, RHYTHM_VOCAB),
            shared=z_r, start=lifted["rdec.start"],
        )
        r_logits, rhythm_ce, r_tokens, r_cube = head_and_ce(
            "rdec.out", r_out, batch.rhythm_tokens, RHYTHM_VOCAB
        )
        if rhythm_feed == "teacher":
            seq_r = g.leaf(
                _step_major(batch.r).reshape(steps * batch_n, RHYTHM_VOCAB),
                requires_grad=False,
            )
        elif rhythm_feed == "soft":
            seq_r = ad.softmax(r_logits)
        else:
            seq_r = g.leaf(
                one_hot(r_tokens.T.reshape(-1), RHYTHM_VOCAB), requires_grad=False
            )
        aux.update(rhythm_pred=r_tokens, rhythm_logits=r_cube)
        z_dec, seq_in = z_p, seq_r
    else:
        rhythm_ce = None
        z_dec, seq_in = z, None

    const_m = np.concatenate(
        [_shifted_prev(batch.x, MELODY_VOCAB), _step_major(batch.c)], axis=2
    )
    init = ad.tanh(_linear(lifted, "gdec.init", z_dec))
    out = None
    for layer in range(hyper.global_layers):
        h0 = ad.narrow(init, layer * hyper.global_hidden, hyper.global_hidden)
        gru = _gru(lifted, f"gdec.l{layer}")
        if layer == 0:
            out = ad.gru_sequence(
                gru, h0, steps, const=const_m, shared=z_dec,
                seq=seq_in, start=lifted["gdec.start"],
            )
        else:
            out = ad.gru_sequence(gru, h0, steps, seq=out)
    _, melody_ce, m_tokens, m_cube = head_and_ce(
        "gdec.out", out, batch.melody_tokens, MELODY_VOCAB
    )
    aux.update(melody_pred=m_tokens, melody_logits=m_cube)
    return melody_ce, rhythm_ce, aux


def _decode_losses_stepwise(g, lifted, hyper, batch, z, rng, tf_rate, rhythm_feed):
    """Per-step decoding with Bernoulli teacher-forcing draws."""

    def draws():
        return rng.random(SEQ_LEN) < tf_rate

    aux = {}
    if hyper.mode == "ec2":
        z_r = ad.narrow(z, 0, hyper.z_half)
        z_p = ad.narrow(z, hyper.z_half, hyper.z_half)
        r_logits, r_tokens = decode_rhythm(
            g, lifted, hyper, z_r, teacher=batch.rhythm_tokens, tf_draws=draws()
        )
        if rhythm_feed == "teacher":
            rhythm_inputs = [
                g.leaf(batch.r[:, t, :], requires_grad=False) for t in range(SEQ_LEN)
            ]
        elif rhythm_feed == "soft":
            rhythm_inputs = [ad.softmax(lg) for lg in r_logits]
        else:
            rhythm_inputs = [
                g.leaf(one_hot(r_tokens[:, t], RHYTHM_VOCAB), requires_grad=False)
                for t in range(SEQ_LEN)
            ]
        rhythm_ce = _mean_ce(r_logits, batch.rhythm_tokens)
        aux.update(
            rhythm_pred=r_tokens,
            rhythm_logits=np.stack([lg.data for lg in r_logits], axis=1),
        )
        z_dec, rhythm_in = z_p, rhythm_inputs
    else:
        rhythm_ce = None
        z_dec, rhythm_in = z, None

    m_logits, m_tokens = decode_melody(
        g, lifted, hyper, z_dec, rhythm_in, batch.c,
        teacher=batch.melody_tokens, tf_draws=draws(),
    )
    melody_ce = _mean_ce(m_logits, batch.melody_tokens)
    aux.update(
        melody_pred=m_tokens,
        melody_logits=np.stack([lg.data for lg in m_logits], axis=1),
    )
    return melody_ce, rhythm_ce, aux


# ---------------------------------------------------------------------------
# Inference paths (no gradients)


def encode_mu(params: ModelParams, x: np.ndarray, c: np.ndarray):
    """Posterior mean and log-variance as plain arrays."""
    g = ad.Graph()
    lifted = lift(g, params, requires_grad=False)
    mu, log_var = encode(g, lifted, params.hyper, x, c)
    return mu.data.copy(), log_var.data.copy()


def greedy_decode(params: ModelParams, z: np.ndarray, c: np.ndarray):
    """Full inference decode from latent codes: greedy feedback everywhere.

    In the split model the melody decoder consumes the rhythm decoder's
    greedy output. Returns (melody_tokens, rhythm_tokens), the latter None
    in vanilla mode.
    """
    hyper = params.hyper
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[1] != hyper.z_dim:
        raise ad.ShapeError(f"greedy_decode: z must be (B, {hyper.z_dim}), got {z.shape}")
    g = ad.Graph()
    lifted = lift(g, params, requires_grad=False)
    zt = g.leaf(z, requires_grad=False)
    if hyper.mode == "ec2":
        z_r = ad.narrow(zt, 0, hyper.z_half)
        z_p = ad.narrow(zt, hyper.z_half, hyper.z_half)
        r_logits, r_tokens = decode_rhythm(g, lifted, hyper, z_r)
        rhythm_inputs = [
            g.leaf(one_hot(r_tokens[:, t], RHYTHM_VOCAB), requires_grad=False)
            for t in range(SEQ_LEN)
        ]
        _, m_tokens = decode_melody(g, lifted, hyper, z_p, rhythm_inputs, c)
        return m_tokens, r_tokens
    _, m_tokens = decode_melody(g, lifted, hyper, zt, None, c)
    return m_tokens, None


def reconstruct(params: ModelParams, batch: Batch):
    """Encode to the posterior mean and greedily decode back."""
    mu, _ = encode_mu(params, batch.x, batch.c)
    return greedy_decode(params, mu, batch.c)
