"""Pointer model: conv embedding, LSTM encoder/decoder, masked attention.

The decoder emits one city per step. Attention logits over the encoder
states are ``v . tanh(A_ref e_i + A_query q)`` with visited cities masked
out of the softmax; glimpse rounds refine the query with the same masking
convention before the final pointer softmax. Training is teacher-forced
along the ground-truth tour.

Everything is expressed over a whole mini-batch of equal-size instances:
per-step activations are (B, d) and encoder states are stored (B*n, d)
instance-major. Single-instance wrappers are the B = 1 case.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import InputError, StateError, ValidityError
from ..geometry import Tour
from . import autodiff as ad
from .autodiff import Tensor
from .params import ModelParams


def _conv_taps(coords3: np.ndarray, k: int, dtype) -> list[np.ndarray]:
    """Zero-padded shifted copies of the input, one per kernel tap."""
    B, n, ch = coords3.shape
    half = k // 2
    taps = []
    for t in range(k):
        offset = t - half
        shifted = np.zeros((B, n, ch), dtype=dtype)
        src_lo, src_hi = max(0, offset), min(n, n + offset)
        dst_lo, dst_hi = max(0, -offset), min(n, n - offset)
        shifted[:, dst_lo:dst_hi, :] = coords3[:, src_lo:src_hi, :]
        taps.append(shifted.reshape(B * n, ch))
    return taps


def _embed_batch(coords3: np.ndarray, params: ModelParams) -> Tensor:
    dtype = params.config.dtype
    coords3 = np.asarray(coords3, dtype=dtype)
    taps = _conv_taps(coords3, params.config.embed_kernel_width, dtype)
    return ad.conv1d_embed(taps, params["embed_kernel"], params["embed_bias"])


def _lstm_step(x: Tensor, h: Tensor, c: Tensor, wx: Tensor, wh: Tensor, b: Tensor):
    d = h.shape[1]
    zz = ad.add(ad.linear(x, wx, b), ad.linear(h, wh))
    i = ad.sigmoid(ad.slice_cols(zz, 0, d))
    f = ad.sigmoid(ad.slice_cols(zz, d, 2 * d))
    g = ad.tanh(ad.slice_cols(zz, 2 * d, 3 * d))
    o = ad.sigmoid(ad.slice_cols(zz, 3 * d, 4 * d))
    c2 = ad.add(ad.mul(f, c), ad.mul(i, g))
    h2 = ad.mul(o, ad.tanh(c2))
    return h2, c2


def _encode_batch(E: Tensor, B: int, n: int, params: ModelParams):
    d = params.config.hidden_dim
    dtype = params.config.dtype
    h = ad.constant(np.zeros((B, d), dtype=dtype))
    c = ad.constant(np.zeros((B, d), dtype=dtype))
    steps = []
    base = np.arange(B, dtype=np.intp) * n
    for t in range(n):
        x = ad.gather_rows(E, base + t)
        h, c = _lstm_step(x, h, c, params["enc_wx"], params["enc_wh"], params["enc_b"])
        steps.append(h)
    refs = ad.interleave_steps(steps)
    return refs, (h, c)


def _attention_logits(q: Tensor, proj_refs: Tensor, query_w: Tensor, v: Tensor, n: int) -> Tensor:
    B = q.shape[0]
    qa = ad.linear(q, query_w)
    s = ad.add(proj_refs, ad.repeat_rows(qa, n))
    return ad.reshape(ad.matvec(ad.tanh(s), v), (B, n))


def _glimpse_refine(
    q: Tensor,
    refs: Tensor,
    proj_glimpse: Tensor,
    avail: np.ndarray,
    params: ModelParams,
    n: int,
) -> Tensor:
    for _ in range(params.config.glimpses):
        u = _attention_logits(q, proj_glimpse, params["glimpse_query"], params["glimpse_v"], n)
        p = ad.masked_softmax(u, avail)
        q = ad.rows_mix(p, refs, n)
    return q


def _check_avail(avail: np.ndarray) -> None:
    if not np.all(avail.any(axis=1)):
        raise StateError("every city is masked; nothing to point at")


class _BatchDecoder:
    """Shared machinery for teacher-forced NLL and greedy decoding."""

    def __init__(self, coords3: np.ndarray, params: ModelParams):
        self.params = params
        self.B, self.n, _ = coords3.shape
        self.E = _embed_batch(coords3, params)
        self.refs, (self.h, self.c) = _encode_batch(self.E, self.B, self.n, params)
        self.proj_pointer = ad.linear(self.refs, params["attn_ref"])
        self.proj_glimpse = ad.linear(self.refs, params["glimpse_ref"])
        self.avail = np.ones((self.B, self.n), dtype=bool)
        start = params["start_token"]
        self.x = ad.repeat_rows(ad.reshape(start, (1, start.shape[0])), self.B)
        self._base = np.arange(self.B, dtype=np.intp) * self.n

    def step_logits(self) -> Tensor:
        _check_avail(self.avail)
        p = self.params
        self.h, self.c = _lstm_step(self.x, self.h, self.c, p["dec_wx"], p["dec_wh"], p["dec_b"])
        q = _glimpse_refine(self.h, self.refs, self.proj_glimpse, self.avail, p, self.n)
        return _attention_logits(q, self.proj_pointer, p["attn_query"], p["attn_v"], self.n)

    def advance(self, chosen: np.ndarray) -> None:
        avail = self.avail.copy()
        avail[np.arange(self.B), chosen] = False
        self.avail = avail
        self.x = ad.gather_rows(self.E, self._base + chosen)


def sequence_nll_loss(coords3: np.ndarray, targets: np.ndarray, params: ModelParams) -> Tensor:
    """Total teacher-forced negative log likelihood over a batch (a scalar
    graph node; divide by B for the mean batch loss)."""
    targets = np.asarray(targets, dtype=np.intp)
    dec = _BatchDecoder(coords3, params)
    total = None
    for step in range(dec.n):
        logits = dec.step_logits()
        logp = ad.masked_log_softmax(logits, dec.avail)
        picked = ad.pick(logp, targets[:, step])
        total = picked if total is None else ad.add(total, picked)
        dec.advance(targets[:, step])
    return ad.neg(ad.sum_all(total))


def greedy_decode_batch(coords3: np.ndarray, params: ModelParams) -> np.ndarray:
    """Greedy tours for a batch of equal-size instances; ties to lowest index."""
    with ad.no_grad():
        dec = _BatchDecoder(coords3, params)
        orders = np.zeros((dec.B, dec.n), dtype=np.int64)
        for step in range(dec.n):
            probs = ad.masked_softmax(dec.step_logits(), dec.avail).value
            chosen = np.argmax(probs, axis=1)
            orders[:, step] = chosen
            dec.advance(chosen)
    return orders


# ---------------------------------------------------------------------------
# Single-instance surface


def embed(coords: np.ndarray, params: ModelParams) -> np.ndarray:
    """Per-city embedding of unit-square coordinates: (n, 2) -> (n, d)."""
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise InputError(f"expected (n, 2) coordinates, got {coords.shape}")
    with ad.no_grad():
        return _embed_batch(coords[None], params).value.copy()


def encode(embedded: np.ndarray, params: ModelParams):
    """Scan the encoder LSTM over the embedded cities.

    Returns the per-city reference states (n, d) and the final (h, c).
    """
    embedded = np.asarray(embedded, dtype=params.config.dtype)
    n = embedded.shape[0]
    with ad.no_grad():
        refs, (h, c) = _encode_batch(ad.constant(embedded), 1, n, params)
        return refs.value.copy(), (h.value[0].copy(), c.value[0].copy())


def pointer(
    q: np.ndarray, refs: np.ndarray, visited_mask: np.ndarray, params: ModelParams
) -> np.ndarray:
    """Pointer distribution over cities; visited entries are exactly 0."""
    avail = ~np.asarray(visited_mask, dtype=bool).reshape(1, -1)
    _check_avail(avail)
    n = avail.shape[1]
    with ad.no_grad():
        refs_t = ad.constant(np.asarray(refs, dtype=params.config.dtype))
        proj = ad.linear(refs_t, params["attn_ref"])
        q_t = ad.constant(np.asarray(q, dtype=params.config.dtype).reshape(1, -1))
        u = _attention_logits(q_t, proj, params["attn_query"], params["attn_v"], n)
        return ad.masked_softmax(u, avail).value[0].copy()


def glimpse(
    q: np.ndarray, refs: np.ndarray, visited_mask: np.ndarray, params: ModelParams
) -> np.ndarray:
    """Refine the query by attention-weighted mixes of the reference states."""
    avail = ~np.asarray(visited_mask, dtype=bool).reshape(1, -1)
    _check_avail(avail)
    n = avail.shape[1]
    with ad.no_grad():
        refs_t = ad.constant(np.asarray(refs, dtype=params.config.dtype))
        proj = ad.linear(refs_t, params["glimpse_ref"])
        q_t = ad.constant(np.asarray(q, dtype=params.config.dtype).reshape(1, -1))
        out = _glimpse_refine(q_t, refs_t, proj, avail, params, n)
        return out.value[0].copy()


@dataclass(frozen=True)
class DecodeState:
    """Decoder loop state; ``visit`` marks the chosen city and advances."""

    visited_mask: np.ndarray
    lstm_state: tuple[np.ndarray, np.ndarray]
    step: int = 0
    log_prob_sum: float = 0.0

    @classmethod
    def initial(cls, n: int, encoder_state: tuple[np.ndarray, np.ndarray]) -> "DecodeState":
        return cls(visited_mask=np.zeros(n, dtype=bool), lstm_state=encoder_state)

    def visit(self, city: int, prob: float = 1.0) -> "DecodeState":
        if self.visited_mask[city]:
            raise StateError(f"city {city} already visited")
        mask = self.visited_mask.copy()
        mask[city] = True
        return replace(
            self,
            visited_mask=mask,
            step=self.step + 1,
            log_prob_sum=self.log_prob_sum + float(np.log(prob)),
        )


def decode_step(
    state: DecodeState,
    prev_city_embedding: np.ndarray | None,
    refs: np.ndarray,
    params: ModelParams,
) -> tuple[np.ndarray, DecodeState]:
    """One decoder step: LSTM update, glimpse refinement, pointer softmax.

    ``prev_city_embedding`` is the embedding of the last visited city, or
    None at step 0 (the trainable start token is consumed instead).
    """
    n = len(state.visited_mask)
    if state.step >= n:
        raise StateError(f"decode_step called after {n} steps")
    p = params
    dtype = p.config.dtype
    with ad.no_grad():
        if prev_city_embedding is None:
            x = ad.reshape(p["start_token"], (1, p.config.hidden_dim))
        else:
            x = ad.constant(np.asarray(prev_city_embedding, dtype=dtype).reshape(1, -1))
        h = ad.constant(state.lstm_state[0].reshape(1, -1).astype(dtype))
        c = ad.constant(state.lstm_state[1].reshape(1, -1).astype(dtype))
        h, c = _lstm_step(x, h, c, p["dec_wx"], p["dec_wh"], p["dec_b"])
        avail = ~state.visited_mask.reshape(1, -1)
        _check_avail(avail)
        refs_t = ad.constant(np.asarray(refs, dtype=dtype))
        proj_p = ad.linear(refs_t, p["attn_ref"])
        proj_g = ad.linear(refs_t, p["glimpse_ref"])
        q = _glimpse_refine(h, refs_t, proj_g, avail, p, n)
        u = _attention_logits(q, proj_p, p["attn_query"], p["attn_v"], n)
        probs = ad.masked_softmax(u, avail).value[0].copy()
    new_state = replace(state, lstm_state=(h.value[0].copy(), c.value[0].copy()))
    return probs, new_state


def decode_greedy(instance, params: ModelParams) -> Tour:
    """Deterministic argmax decode; always a valid permutation."""
    coords = instance.model_xy()
    order = greedy_decode_batch(coords[None], params)[0]
    return Tour(order)


def sequence_nll(instance, target: Tour, params: ModelParams) -> float:
    """Teacher-forced negative log likelihood of a tour (non-negative)."""
    coords = instance.model_xy()
    n = len(coords)
    try:
        target.validate(n)
    except ValidityError as e:
        raise ValidityError(f"target tour invalid for instance {instance.id}: {e}") from e
    with ad.no_grad():
        loss = sequence_nll_loss(coords[None], np.asarray([target.order]), params)
    return float(loss.value)
