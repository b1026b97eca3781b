"""Cycle-level power traces for mapped netlists.

Each cycle every net settles once.  A cell whose output differs from the
previous cycle's value toggles and draws ``w_cap*C + w_ds*DS``; every cell
adds ``static_w*C`` per cycle.  Gaussian noise is drawn per trace from a
generator seeded with ``seed ^ trace_index``, so results do not depend on
evaluation order.  This linear toggle model is our own choice of leakage
function, not a calibrated power table.
"""
from __future__ import annotations

import csv
import graphlib
import io
import math
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .library import CellLibrary
from .netlist import Design, LogicBlock, Module, evaluate_combinational

MAGIC = b"PSYN"
VERSION = 1


class PowerSimError(ValueError):
    pass


@dataclass(frozen=True)
class PowerModel:
    w_cap: float = 1.0
    w_ds: float = 0.5
    static_w: float = 0.01
    noise_sigma: float = 0.5
    seed: int = 0

    def __post_init__(self):
        for name in ("w_cap", "w_ds", "static_w", "noise_sigma"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise PowerSimError(f"{name} must be finite and >= 0, got {v}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TraceSet:
    plaintexts: np.ndarray
    key: int
    traces: np.ndarray
    meta: dict = field(default_factory=dict)
    keys: np.ndarray | None = None  # per-trace keys, when they vary

    def __post_init__(self):
        self.plaintexts = np.asarray(self.plaintexts, dtype=np.uint64)
        self.traces = np.atleast_2d(np.asarray(self.traces, dtype=float))
        if self.traces.shape[0] != len(self.plaintexts):
            raise PowerSimError("trace count does not match plaintext count")

    @property
    def num_traces(self) -> int:
        return self.traces.shape[0]

    @property
    def num_samples(self) -> int:
        return self.traces.shape[1]

    def key_array(self) -> np.ndarray:
        if self.keys is not None:
            return np.asarray(self.keys, dtype=np.uint64)
        return np.full(self.num_traces, self.key, dtype=np.uint64)


def hamming_weight(word) -> int:
    return int(word).bit_count()


def hamming_distance(a, b) -> int:
    return (int(a) ^ int(b)).bit_count()


def popcount_array(words) -> np.ndarray:
    w = np.asarray(words, dtype=np.uint64)
    out = np.zeros(w.shape, dtype=np.int64)
    for k in range(64):
        out += ((w >> np.uint64(k)) & np.uint64(1)).astype(np.int64)
    return out


def register_depth(mod: Module) -> int:
    """Longest chain of registers between inputs and outputs (feedback counted once)."""
    regs = mod.registers
    if not regs:
        return 0
    q_of = {}
    for el in regs:
        for b in el.outputs:
            q_of[b] = el.name
    ts = graphlib.TopologicalSorter()
    for el in regs:
        preds = {q_of[s] for d in el.inputs for s in mod.support(d) if s in q_of}
        ts.add(el.name, *preds)
    try:
        order = list(ts.static_order())
    except graphlib.CycleError:
        return len(regs)
    depth = {}
    by_name = {el.name: el for el in regs}
    for name in order:
        el = by_name[name]
        preds = {q_of[s] for d in el.inputs for s in mod.support(d) if s in q_of}
        depth[name] = 1 + max((depth[p] for p in preds), default=0)
    return max(depth.values())


def _word_bits(mod: Module, port: str, words: np.ndarray) -> dict:
    net = mod.nets.get(port)
    if net is None or net.direction != "input":
        raise PowerSimError(f"module {mod.name} has no input port {port!r}")
    if net.width < 64 and np.any(words >> np.uint64(net.width)):
        raise PowerSimError(f"value wider than port {port} ({net.width} bits)")
    return {(port, i): ((words >> np.uint64(i)) & np.uint64(1)).astype(bool) for i in range(net.width)}


def _cell_weights(mod: Module, lib: CellLibrary, model: PowerModel):
    toggle_w, static = [], 0.0
    for inst in mod.instances:
        cell = lib[inst.cell]
        toggle_w.append(model.w_cap * cell.cap + model.w_ds * cell.ds)
        static += model.static_w * cell.cap
    return np.asarray(toggle_w), static


def noiseless_power(mapped: Design, lib: CellLibrary, plaintexts, keys, model: PowerModel,
                    ports=("p", "k")) -> np.ndarray:
    """Per-cycle power without noise, shape (num_traces, cycles)."""
    mod = mapped.top_module
    if any(isinstance(el, LogicBlock) for el in mod.elements):
        raise PowerSimError("power simulation needs a mapped design (cell instances only)")
    pts = np.asarray(plaintexts, dtype=np.uint64)
    ks = np.asarray(keys, dtype=np.uint64)
    if ks.ndim == 0:
        ks = np.full(pts.shape, ks, dtype=np.uint64)
    n = len(pts)
    sources = {}
    sources.update(_word_bits(mod, ports[0], pts))
    if ports[1] is not None:
        sources.update(_word_bits(mod, ports[1], ks))
    weights, static = _cell_weights(mod, lib, model)
    outs = [inst.outputs[0] for inst in mod.instances]
    zero = np.zeros(n, bool)
    prev = np.zeros((len(outs), n), bool)
    state = {b: zero for el in mod.registers for b in el.outputs}
    cycles = 1 + register_depth(mod)
    power = np.zeros((n, cycles))
    for c in range(cycles):
        values = dict(sources)
        values.update(state)
        evaluate_combinational(mod, values, library=lib, shape=(n,))
        cur = np.stack([values.get(b, zero) for b in outs]) if outs else prev
        toggles = cur ^ prev
        power[:, c] = weights @ toggles + static if outs else static
        prev = cur
        state = {}
        for el in mod.registers:
            state[el.outputs[0]] = values.get(el.inputs[0], zero)
    return power


def simulate_traces(mapped: Design, lib: CellLibrary, plaintexts, key, model: PowerModel | None = None,
                    ports=("p", "k"), meta: dict | None = None) -> TraceSet:
    """Noisy per-cycle traces; ``key`` may be one word or one word per plaintext."""
    model = model or PowerModel()
    pts = np.asarray(plaintexts, dtype=np.uint64)
    keys = np.asarray(key, dtype=np.uint64)
    power = noiseless_power(mapped, lib, pts, keys, model, ports)
    if model.noise_sigma > 0:
        s = power.shape[1]
        noise = np.empty_like(power)
        for t in range(power.shape[0]):
            noise[t] = np.random.default_rng(model.seed ^ t).normal(0.0, model.noise_sigma, s)
        power = power + noise
    if not np.all(np.isfinite(power)):
        raise PowerSimError("non-finite power sample")
    info = {"model": model.to_dict(), "design": mapped.top}
    info.update(meta or {})
    if keys.ndim == 0:
        return TraceSet(pts, int(keys), power, info)
    return TraceSet(pts, int(keys[0]) if len(keys) else 0, power, info, keys=keys)


# ---------------------------------------------------------------------------
# trace files

def write_traces(ts: TraceSet, path, key_bytes: int = 8):
    if ts.keys is not None and np.any(ts.keys != ts.keys[0]):
        raise PowerSimError("trace files hold a single key")
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<IIII", VERSION, ts.num_traces, ts.num_samples, key_bytes))
    buf.write(int(ts.key).to_bytes(key_bytes, "little"))
    buf.write(np.asarray(ts.plaintexts, dtype="<u8").tobytes())
    buf.write(np.asarray(ts.traces, dtype="<f4").tobytes())
    Path(path).write_bytes(buf.getvalue())


def read_traces(path) -> TraceSet:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise PowerSimError("not a trace file (bad magic)")
    version, nt, ns, kl = struct.unpack_from("<IIII", data, 4)
    if version != VERSION:
        raise PowerSimError(f"unsupported trace file version {version}")
    off = 20
    key = int.from_bytes(data[off:off + kl], "little")
    off += kl
    pts = np.frombuffer(data, dtype="<u8", count=nt, offset=off).astype(np.uint64)
    off += 8 * nt
    expected = off + 4 * nt * ns
    if len(data) != expected:
        raise PowerSimError(f"trace file length {len(data)} != expected {expected}")
    tr = np.frombuffer(data, dtype="<f4", count=nt * ns, offset=off).astype(float).reshape(nt, ns)
    return TraceSet(pts, key, tr, {})


def traces_to_csv(ts: TraceSet) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["plaintext", "key"] + [f"s{i}" for i in range(ts.num_samples)])
    keys = ts.key_array()
    for p, k, row in zip(ts.plaintexts, keys, np.asarray(ts.traces, dtype=np.float32)):
        w.writerow([int(p), int(k)] + [repr(float(v)) for v in row])
    return out.getvalue()
