"""Side-channel evaluation: CPA, DPA, success rate, TVLA, mutual information, netlist change."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .netlist import Design
from .powersim import TraceSet, popcount_array

PRESENT_SBOX = (0xC, 0x5, 0x6, 0xB, 0x9, 0x0, 0xA, 0xD, 0x3, 0xE, 0xF, 0x8, 0x4, 0x7, 0x1, 0x2)
DEFAULT_THRESHOLD = 4.5


def _gf_mul(a: int, b: int) -> int:
    p = 0
    while b:
        if b & 1:
            p ^= a
        a = ((a << 1) ^ 0x11B) if a & 0x80 else a << 1
        b >>= 1
    return p


def _aes_sbox() -> tuple[int, ...]:
    inv = [0] * 256
    for x in range(1, 256):
        for y in range(1, 256):
            if _gf_mul(x, y) == 1:
                inv[x] = y
                break
    out = []
    for x in range(256):
        s = r = inv[x]
        for _ in range(4):
            r = ((r << 1) | (r >> 7)) & 0xFF
            s ^= r
        out.append(s ^ 0x63)
    return tuple(out)


AES_SBOX = _aes_sbox()


class StatisticError(ValueError):
    pass


@dataclass(frozen=True)
class AttackResult:
    ranked_keys: tuple[int, ...]
    statistics: tuple[float, ...]
    true_key: int | None = None

    @property
    def best_key(self) -> int:
        return self.ranked_keys[0]

    @property
    def success(self) -> bool:
        return self.true_key is not None and self.best_key == self.true_key

    def rank_of(self, key: int) -> int:
        return self.ranked_keys.index(key)

    def to_dict(self) -> dict:
        return {"best_key": self.best_key, "true_key": self.true_key, "success": self.success,
                "ranked_keys": list(self.ranked_keys), "statistics": list(self.statistics)}


def _subkey_setup(ts: TraceSet, sbox, offset: int, width: int | None):
    sbox = np.asarray(sbox, dtype=np.int64)
    if width is None:
        width = max(1, (len(sbox) - 1).bit_length())
    if len(sbox) != 1 << width:
        raise StatisticError(f"sbox has {len(sbox)} entries, expected {1 << width}")
    if width > 16:
        raise StatisticError("key-guess space larger than 2^16")
    mask = (1 << width) - 1
    pts = ((ts.plaintexts >> np.uint64(offset)) & np.uint64(mask)).astype(np.int64)
    true_key = (int(ts.key) >> offset) & mask
    guesses = np.arange(1 << width, dtype=np.int64)
    inter = sbox[pts[None, :] ^ guesses[:, None]]  # guesses x traces
    return guesses, inter, true_key


def _rank(stats: np.ndarray, guesses: np.ndarray):
    order = np.lexsort((guesses, -stats))
    return tuple(int(g) for g in guesses[order])


def pearson_matrix(pred: np.ndarray, traces: np.ndarray) -> np.ndarray:
    """Correlation of every prediction row with every trace column; undefined -> 0."""
    p = pred - pred.mean(axis=1, keepdims=True)
    t = traces - traces.mean(axis=0, keepdims=True)
    num = p @ t
    den = np.sqrt((p * p).sum(axis=1))[:, None] * np.sqrt((t * t).sum(axis=0))[None, :]
    out = np.zeros_like(num)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return np.clip(out, -1.0, 1.0)


def cpa_attack(ts: TraceSet, sbox=PRESENT_SBOX, offset: int = 0, width: int | None = None) -> AttackResult:
    """Rank guesses by max |rho| between HW(Sbox(p ^ g)) and each sample column.

    ``offset`` and ``width`` select the attacked sub-key bits of plaintext
    and key.
    """
    if ts.num_traces < 2:
        raise StatisticError("CPA needs at least 2 traces")
    guesses, inter, true_key = _subkey_setup(ts, sbox, offset, width)
    pred = popcount_array(inter.astype(np.uint64)).astype(float)
    rho = pearson_matrix(pred, np.asarray(ts.traces, dtype=float))
    stats = np.abs(rho).max(axis=1)
    return AttackResult(_rank(stats, guesses), tuple(float(s) for s in stats), true_key)


def dpa_attack(ts: TraceSet, bit_index: int = 0, sbox=PRESENT_SBOX, offset: int = 0,
               width: int | None = None) -> AttackResult:
    """Difference of means between traces whose predicted Sbox bit is 1 and 0."""
    guesses, inter, true_key = _subkey_setup(ts, sbox, offset, width)
    sel = ((inter >> bit_index) & 1).astype(bool)
    tr = np.asarray(ts.traces, dtype=float)
    n1 = sel.sum(axis=1)
    n0 = sel.shape[1] - n1
    s1 = sel.astype(float) @ tr
    s0 = tr.sum(axis=0)[None, :] - s1
    stats = np.zeros(len(guesses))
    ok = (n1 > 0) & (n0 > 0)
    if ok.any():
        diff = s1[ok] / n1[ok, None] - s0[ok] / n0[ok, None]
        stats[ok] = np.abs(diff).max(axis=1)
    return AttackResult(_rank(stats, guesses), tuple(float(s) for s in stats), true_key)


def success_rate(outcomes) -> float:
    outcomes = list(outcomes)
    if not outcomes:
        raise StatisticError("success rate needs at least one outcome")
    return sum(1 for o in outcomes if o) / len(outcomes)


def welch_t(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise StatisticError("each group needs at least 2 samples")
    va, vb = a.var(ddof=1), b.var(ddof=1)
    if va == 0 and vb == 0:
        raise StatisticError("both groups have zero variance; t is undefined")
    return float((a.mean() - b.mean()) / math.sqrt(va / len(a) + vb / len(b)))


@dataclass(frozen=True)
class TvlaResult:
    t_values: tuple[float | None, ...]
    threshold: float = DEFAULT_THRESHOLD
    excluded: tuple[int, ...] = field(default_factory=tuple)

    @property
    def max_abs_t(self) -> float:
        vals = [abs(t) for t in self.t_values if t is not None]
        return max(vals) if vals else 0.0

    @property
    def exceed_count(self) -> int:
        return sum(1 for t in self.t_values if t is not None and abs(t) > self.threshold)

    @property
    def leaks(self) -> bool:
        return self.exceed_count > 0

    def to_dict(self) -> dict:
        return {"t_values": list(self.t_values), "max_abs_t": self.max_abs_t, "exceed_count": self.exceed_count,
                "threshold": self.threshold, "excluded": list(self.excluded)}


def tvla(fixed: TraceSet, random: TraceSet, threshold: float = DEFAULT_THRESHOLD) -> TvlaResult:
    """Per-sample Welch t between fixed-input and random-input populations."""
    a = np.asarray(fixed.traces if isinstance(fixed, TraceSet) else fixed, dtype=float)
    b = np.asarray(random.traces if isinstance(random, TraceSet) else random, dtype=float)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise StatisticError("fixed and random traces have different sample counts")
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise StatisticError("TVLA needs at least 2 traces per population")
    ts, excluded = [], []
    for s in range(a.shape[1]):
        try:
            ts.append(welch_t(a[:, s], b[:, s]))
        except StatisticError:
            ts.append(None)
            excluded.append(s)
    return TvlaResult(tuple(ts), threshold, tuple(excluded))


def _entropy(counts: np.ndarray) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log2(p)).sum())


def estimate_mutual_information(keys, leakages, bins: int = 16, value_range: tuple[float, float] | None = None) -> float:
    """Plug-in I(K;L) in bits with L histogrammed into ``bins`` equal-width bins.

    The bins span ``value_range`` when given (values outside are clipped to
    the end bins), otherwise the sample range.
    """
    k = np.asarray(keys).ravel()
    l = np.asarray(leakages, dtype=float).ravel()
    if len(k) == 0:
        raise StatisticError("empty samples")
    if len(k) != len(l):
        raise StatisticError("keys and leakages differ in length")
    if bins < 2:
        raise StatisticError("bins must be >= 2")
    lo, hi = (float(l.min()), float(l.max())) if value_range is None else map(float, value_range)
    if hi > lo:
        lb = np.clip(((l - lo) / (hi - lo) * bins).astype(np.int64), 0, bins - 1)
    else:
        lb = np.zeros(len(l), dtype=np.int64)
    _, kb = np.unique(k, return_inverse=True)
    joint = np.zeros((kb.max() + 1, bins))
    np.add.at(joint, (kb, lb), 1)
    hk = _entropy(joint.sum(axis=1))
    hl = _entropy(joint.sum(axis=0))
    hkl = _entropy(joint.ravel())
    return max(0.0, hk + hl - hkl)


def netlist_change(conventional: Design, posyn: Design) -> float:
    """Percentage of conventional instances whose (cone, cell) pair changed.

    Per cone (the source block an instance was emitted for) the two cell
    multisets are compared; replaced and added cells both count, cones
    present in only one design count in full.
    """
    def cones(design):
        out: dict[str, Counter] = {}
        for inst in design.instances:
            out.setdefault(inst.cone, Counter())[inst.cell] += 1
        return out

    a, b = cones(conventional), cones(posyn)
    total = sum(sum(c.values()) for c in a.values())
    if total == 0:
        return 0.0
    changed = 0
    for cone in set(a) | set(b):
        ca, cb = a.get(cone, Counter()), b.get(cone, Counter())
        changed += max(sum((ca - cb).values()), sum((cb - ca).values()))
    return 100.0 * changed / total
