"""End-to-end flow: config, synthesis of both netlists, attack and assessment harnesses."""
from __future__ import annotations

import copy
import json
import logging
import warnings
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import sca
from .assignment import MODES, CostWeights, MappingSolution, solve_mapping
from .equivalence import EquivalenceReport, verify_design
from .library import FIXTURE_LIBRARIES, CellLibrary, LibraryError, library_to_dict, load_library, parse_library
from .mapper import CandidateSet, SAConfig, conventional_candidate, generate_candidates, sequential_candidates
from .netlist import Design, block_truth_table, emit_netlist, parse_netlist
from .powersim import PowerModel, noiseless_power, simulate_traces, write_traces
from .vulnerability import AnnotationSet, load_annotations, partition, profile_blocks

log = logging.getLogger(__name__)

DESIGNS = ("conventional", "posyn")
SBOXES = {"present": sca.PRESENT_SBOX, "aes": sca.AES_SBOX}
DEFAULT_GRID = (0.25, 0.5, 1.0, 2.0, 4.0)

# purposes mixed into derived seeds
_ATTACK, _TVLA_FIXED, _TVLA_RANDOM, _TVLA_KEY = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    """An error raised inside one flow stage; ``exit_code`` follows the CLI contract."""

    def __init__(self, stage: str, exc: Exception, exit_code: int = 2):
        self.stage = stage
        self.exit_code = exit_code
        super().__init__(f"stage {stage}: {exc}")


class EquivalenceFailure(RuntimeError):
    def __init__(self, design: str, report: EquivalenceReport):
        self.report = report
        super().__init__(f"{design} netlist is not equivalent to the source:\n{report.summary()}")


# ---------------------------------------------------------------------------
# config

def _data_file(kind: str, name: str) -> Path | None:
    res = resources.files("scamap.data").joinpath(kind, name)
    return Path(str(res)) if res.is_file() else None


def _data_dir(kind: str) -> Path:
    return Path(str(resources.files("scamap.data").joinpath(kind))).resolve()


def _resolve(value, base: Path, kind: str, exclude: Path | None = None) -> Path:
    p = Path(value)
    if p.is_absolute() and p.is_file():
        return p
    found = _data_file(kind, str(value))
    # bundled configs name bundled files; user configs name files next to them
    if found is not None and base.resolve() == _data_dir("configs"):
        return found
    local = (base / p).resolve()
    # a config must never resolve one of its inputs to itself
    if local.is_file() and local != exclude:
        return local
    if found is None:
        raise ConfigError(f"cannot resolve file {value!r} ({kind})")
    return found


@dataclass
class RunConfig:
    name: str
    netlist: Path
    library: str
    annotations: Path | None
    output_dir: Path
    seed: int = 0
    mode: str = "replicated"
    fanout_threshold: int = 4
    ports: dict = field(default_factory=lambda: {"plaintext": "p", "key": "k"})
    target: dict = field(default_factory=lambda: {"sbox": "present", "offset": 0, "width": 4, "dpa_bit": 0})
    weights: CostWeights = field(default_factory=CostWeights)
    sa: SAConfig = field(default_factory=SAConfig)
    model: PowerModel = field(default_factory=PowerModel)
    attack: dict = field(default_factory=lambda: {"num_traces": 4000, "attempts": 50, "threshold": 4.5,
                                                  "tvla_traces": 2000, "fixed_plaintext": 0})
    mi: dict = field(default_factory=lambda: {"bins": 16})
    gridsearch: dict = field(default_factory=lambda: {"grid": list(DEFAULT_GRID), "attempts": 10})
    library_path: Path | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.fanout_threshold < 0:
            raise ConfigError("fanout_threshold must be >= 0")
        _check_target(self.target)
        for key in ("num_traces", "attempts", "tvla_traces"):
            if int(self.attack.get(key, 0)) < 0:
                raise ConfigError(f"attack.{key} must be >= 0")

    @property
    def sbox(self):
        name = self.target["sbox"]
        if name == "identity":
            return tuple(range(1 << int(self.target["width"])))
        return SBOXES[name]

    def with_overrides(self, seed=None, mode=None, out=None) -> "RunConfig":
        cfg = copy.copy(self)
        if seed is not None:
            cfg.seed = int(seed)
            cfg.sa = replace(cfg.sa, seed=int(seed))
            cfg.model = replace(cfg.model, seed=int(seed))
        if mode is not None:
            if mode not in MODES:
                raise ConfigError(f"mode must be one of {MODES}")
            cfg.mode = mode
        if out is not None:
            cfg.output_dir = Path(out)
        return cfg

    def to_dict(self, relocate: bool = False) -> dict:
        d = {
            "name": self.name,
            "netlist": "source.net" if relocate else str(self.netlist),
            "library": "library.json" if relocate else str(self.library),
            "annotations": ("annotations.json" if relocate else str(self.annotations)) if self.annotations else None,
            "output_dir": "." if relocate else str(self.output_dir),
            "seed": self.seed,
            "mode": self.mode,
            "fanout_threshold": self.fanout_threshold,
            "ports": dict(self.ports),
            "target": dict(self.target),
            "weights": {"alpha": self.weights.alpha, "beta": self.weights.beta, "gamma": self.weights.gamma},
            "sa": {k: v for k, v in self.sa.to_dict().items()},
            "model": self.model.to_dict(),
            "attack": dict(self.attack),
            "mi": dict(self.mi),
            "gridsearch": dict(self.gridsearch),
        }
        return d

    def load_library(self) -> CellLibrary:
        if self.library_path is not None:
            return parse_library(self.library_path.read_text())
        return load_library(self.library)

    def load_design(self, lib: CellLibrary | None = None) -> Design:
        return parse_netlist(self.netlist.read_text(), lib)

    def load_annotations(self) -> AnnotationSet:
        if self.annotations is None:
            return AnnotationSet()
        return load_annotations(self.annotations.read_text())


def _check_target(target: dict):
    name, width = target["sbox"], int(target["width"])
    if name != "identity":
        if name not in SBOXES:
            raise ConfigError(f"unknown sbox {name!r} (known: {sorted(SBOXES) + ['identity']})")
        if len(SBOXES[name]) != 1 << width:
            raise ConfigError(f"sbox {name!r} has {len(SBOXES[name])} entries but target width is {width}")
    if not 0 <= int(target["dpa_bit"]) < width:
        raise ConfigError(f"dpa_bit {target['dpa_bit']} outside the {width}-bit target")


def config_from_dict(doc: dict, base: Path, source: Path | None = None) -> RunConfig:
    source = source.resolve() if source is not None else None
    try:
        seed = int(doc.get("seed", 0))
        sa_doc = dict(doc.get("sa", {}))
        sa_doc.setdefault("seed", seed)
        model_doc = dict(doc.get("model", {}))
        model_doc.setdefault("seed", seed)
        lib_value = str(doc.get("library", "fixture-65"))
        lib_path = None
        if lib_value not in FIXTURE_LIBRARIES:
            lib_path = _resolve(lib_value, base, "configs", source)
        attack = {"num_traces": 4000, "attempts": 50, "threshold": 4.5, "tvla_traces": 2000, "fixed_plaintext": 0}
        attack.update(doc.get("attack", {}))
        target = {"sbox": "present", "offset": 0, "width": 4, "dpa_bit": 0}
        target.update(doc.get("target", {}))
        grid = {"grid": list(DEFAULT_GRID), "attempts": 10}
        grid.update(doc.get("gridsearch", {}))
        mi = {"bins": 16}
        mi.update(doc.get("mi", {}))
        ann = doc.get("annotations")
        return RunConfig(
            name=str(doc.get("name", "run")),
            netlist=_resolve(doc["netlist"], base, "netlists", source),
            library=lib_value,
            annotations=_resolve(ann, base, "annotations", source) if ann else None,
            output_dir=Path(doc.get("output_dir", "out")),
            seed=seed,
            mode=doc.get("mode", "replicated"),
            fanout_threshold=int(doc.get("fanout_threshold", 4)),
            ports=dict({"plaintext": "p", "key": "k"}, **doc.get("ports", {})),
            target=target,
            weights=CostWeights(**doc.get("weights", {})),
            sa=SAConfig(**sa_doc),
            model=PowerModel(**model_doc),
            attack=attack,
            mi=mi,
            gridsearch=grid,
            library_path=lib_path,
        )
    except KeyError as exc:
        raise ConfigError(f"config is missing {exc}") from None
    except TypeError as exc:
        raise ConfigError(f"bad config field: {exc}") from None
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        found = _data_file("configs", path.name if path.suffix else f"{path}.json")
        if found is None:
            raise ConfigError(f"config file {str(path)!r} not found")
        path = found
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return config_from_dict(doc, path.parent, path)


# ---------------------------------------------------------------------------
# synthesis

@dataclass
class SynthResult:
    design: Design
    lib: CellLibrary
    solutions: dict[str, MappingSolution]
    texts: dict[str, str]
    mapped: dict[str, Design]
    reports: dict[str, EquivalenceReport]
    profiles: dict
    vulnerable: list[int]

    def summary(self) -> dict:
        def area(d):
            return round(sum(self.lib[i.cell].area for i in d.instances), 6)

        return {
            "blocks": len(self.design.blocks),
            "vulnerable_blocks": len(self.vulnerable),
            "mode": self.solutions["posyn"].mode,
            "total_cost": self.solutions["posyn"].total_cost,
            "instances": {k: len(d.instances) for k, d in self.mapped.items()},
            "area": {k: area(d) for k, d in self.mapped.items()},
            "netlist_change_percent": sca.netlist_change(self.mapped["conventional"], self.mapped["posyn"]),
            "equivalent": {k: r.overall for k, r in self.reports.items()},
        }


def block_candidates(blk, lib: CellLibrary, sa: SAConfig) -> CandidateSet:
    if blk.is_sequential:
        return CandidateSet(blk.id, tuple(sequential_candidates(lib)))
    found = generate_candidates(block_truth_table(blk), lib, sa)
    return CandidateSet(blk.id, found.combinations)


def block_conventional(blk, lib: CellLibrary, sa: SAConfig):
    if blk.is_sequential:
        cell = lib.smallest(c for c in lib.sequential if c.arity == 1)
        return next(c for c in sequential_candidates(lib) if c.cells[0] is cell)
    return conventional_candidate(block_truth_table(blk), lib, sa)


def _stage(name, fn, *args, exit_code=2, **kw):
    from .assignment import InfeasibleAssignmentError
    from .mapper import NoFeasibleCandidateError

    try:
        return fn(*args, **kw)
    except (NoFeasibleCandidateError, InfeasibleAssignmentError) as exc:
        raise StageError(name, exc, 4) from exc
    except StageError:
        raise
    except (ValueError, KeyError, LibraryError) as exc:
        raise StageError(name, exc, exit_code) from exc


def map_design(design: Design, lib: CellLibrary, ann: AnnotationSet, weights: CostWeights, sa: SAConfig,
               mode: str = "replicated", fanout_threshold: int = 4):
    """Profile, partition and map; returns (posyn solution, conventional solution, profiles, vulnerable ids)."""
    profiles = _stage("profile", profile_blocks, design, ann, fanout_threshold)
    vulnerable, plain = _stage("partition", partition, design, profiles, fanout_threshold)
    names = {b.id: b.name for b in design.blocks}

    def conv_all():
        return {b.id: block_conventional(b, lib, sa) for b in design.blocks}

    conv = _stage("candidates", conv_all)
    baseline = MappingSolution({}, 0.0, "conventional", {}, conv, names)
    if vulnerable:
        sets = _stage("candidates", lambda: [block_candidates(design.block(b), lib, sa) for b in vulnerable])
        rows = []
        for bid in vulnerable:
            blk = design.block(bid)
            rows.append((bid, profiles[bid], block_truth_table(blk)))
        sol = _stage("assignment", solve_mapping, rows, sets, weights, mode)
    else:
        sol = MappingSolution({}, 0.0, mode)
    sol.conventional = {b: conv[b] for b in plain}
    sol.names = names
    return sol, baseline, profiles, vulnerable


def synthesize(design: Design, lib: CellLibrary, ann: AnnotationSet, weights: CostWeights, sa: SAConfig,
               mode: str = "replicated", fanout_threshold: int = 4, check: bool = True) -> SynthResult:
    sol, baseline, profiles, vulnerable = map_design(design, lib, ann, weights, sa, mode, fanout_threshold)
    solutions = {"posyn": sol, "conventional": baseline}
    texts, mapped, reports = {}, {}, {}
    for name, s in solutions.items():
        texts[name] = _stage("emit", emit_netlist, design, s)
        mapped[name] = _stage("emit", parse_netlist, texts[name], lib)
        reports[name] = _stage("verify", verify_design, design, mapped[name], lib)
        if check and not reports[name].overall:
            raise EquivalenceFailure(name, reports[name])
    return SynthResult(design, lib, solutions, texts, mapped, reports, profiles, vulnerable)


def _dump(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def run_synth(cfg: RunConfig) -> SynthResult:
    lib = _stage("library", cfg.load_library)
    design = _stage("parse", cfg.load_design)
    ann = _stage("annotations", cfg.load_annotations)
    res = synthesize(design, lib, ann, cfg.weights, cfg.sa, cfg.mode, cfg.fanout_threshold, check=False)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "source.net").write_text(cfg.netlist.read_text())
    _dump(out / "library.json", library_to_dict(lib))
    _dump(out / "annotations.json", ann.to_dict())
    _dump(out / "config.json", cfg.to_dict(relocate=True))
    for name in DESIGNS:
        (out / f"mapped_{name}.net").write_text(res.texts[name])
        _dump(out / f"solution_{name}.json", res.solutions[name].to_dict())
        _dump(out / f"equivalence_{name}.json", res.reports[name].to_dict())
        (out / f"equivalence_{name}.txt").write_text(res.reports[name].summary() + "\n")
    _dump(out / "profiles.json", {str(k): v.to_dict() for k, v in sorted(res.profiles.items())})
    _dump(out / "synth.json", res.summary())
    for name in DESIGNS:
        if not res.reports[name].overall:
            raise EquivalenceFailure(name, res.reports[name])
    return res


# ---------------------------------------------------------------------------
# loading a synthesized run

@dataclass
class Run:
    cfg: RunConfig
    lib: CellLibrary
    mapped: dict[str, Design]
    out: Path


def load_run(out_dir, seed=None) -> Run:
    out = Path(out_dir)
    cfg_path = out / "config.json"
    if not cfg_path.is_file():
        raise ConfigError(f"{out} has no config.json; run 'synth' first")
    cfg = load_config(cfg_path).with_overrides(seed=seed)
    cfg.output_dir = out
    lib = parse_library((out / "library.json").read_text())
    mapped = {}
    for name in DESIGNS:
        p = out / f"mapped_{name}.net"
        if not p.is_file():
            raise ConfigError(f"missing artifact {p}")
        mapped[name] = parse_netlist(p.read_text(), lib)
    return Run(cfg, lib, mapped, out)


# ---------------------------------------------------------------------------
# harnesses

def derived_rng(seed: int, *tags) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *[int(t) for t in tags]]))


def derived_seed(seed: int, *tags) -> int:
    return int(np.random.SeedSequence([int(seed), *[int(t) for t in tags]]).generate_state(1)[0])


def random_words(rng: np.random.Generator, width: int, n: int) -> np.ndarray:
    if width >= 64:
        return rng.integers(0, np.iinfo(np.uint64).max, size=n, dtype=np.uint64, endpoint=True)
    return rng.integers(0, 1 << width, size=n, dtype=np.uint64)


def port_width(design: Design, name: str | None) -> int:
    if name is None:
        return 0
    net = design.top_module.nets.get(name)
    if net is None or net.direction != "input":
        raise ConfigError(f"design has no input port {name!r}")
    return net.width


def _ports(cfg: RunConfig):
    return cfg.ports.get("plaintext", "p"), cfg.ports.get("key", "k")


def attack_protocol(mapped: Design, lib: CellLibrary, cfg: RunConfig, attempts: int | None = None,
                    num_traces: int | None = None, trace_path: Path | None = None) -> dict:
    """R attempts, each with a fresh key and N fresh traces; CPA and DPA on every attempt."""
    attempts = int(cfg.attack["attempts"] if attempts is None else attempts)
    n = int(cfg.attack["num_traces"] if num_traces is None else num_traces)
    if attempts < 1:
        raise sca.StatisticError("attempts must be >= 1 (empty outcome list)")
    if n < 2:
        raise sca.StatisticError("at least 2 traces per attempt are required")
    pport, kport = _ports(cfg)
    pw, kw = port_width(mapped, pport), port_width(mapped, kport)
    tgt = cfg.target
    rows = []
    for r in range(attempts):
        rng = derived_rng(cfg.seed, _ATTACK, r)
        key = int(random_words(rng, kw, 1)[0])
        pts = random_words(rng, pw, n)
        model = replace(cfg.model, seed=derived_seed(cfg.model.seed, _ATTACK, r))
        ts = simulate_traces(mapped, lib, pts, np.uint64(key), model, (pport, kport))
        if r == 0 and trace_path is not None:
            write_traces(ts, trace_path, key_bytes=max(1, (kw + 7) // 8))
        cpa = sca.cpa_attack(ts, cfg.sbox, tgt["offset"], tgt["width"])
        dpa = sca.dpa_attack(ts, tgt["dpa_bit"], cfg.sbox, tgt["offset"], tgt["width"])
        rows.append({"attempt": r, "key": key, "subkey": cpa.true_key,
                     "cpa_success": cpa.success, "cpa_rank": cpa.rank_of(cpa.true_key),
                     "dpa_success": dpa.success, "dpa_rank": dpa.rank_of(dpa.true_key)})
    return {
        "attempts": attempts,
        "num_traces": n,
        "cpa_success_rate": sca.success_rate(x["cpa_success"] for x in rows),
        "dpa_success_rate": sca.success_rate(x["dpa_success"] for x in rows),
        "per_attempt": rows,
    }


def tvla_protocol(mapped: Design, lib: CellLibrary, cfg: RunConfig, num_traces: int | None = None):
    """Fixed-vs-random Welch t per sample with one designated fixed plaintext."""
    n = int(cfg.attack["tvla_traces"] if num_traces is None else num_traces)
    pport, kport = _ports(cfg)
    pw, kw = port_width(mapped, pport), port_width(mapped, kport)
    key = np.uint64(int(random_words(derived_rng(cfg.seed, _TVLA_KEY), kw, 1)[0]))
    fixed_pt = np.full(n, int(cfg.attack.get("fixed_plaintext", 0)), dtype=np.uint64)
    rand_pt = random_words(derived_rng(cfg.seed, _TVLA_RANDOM), pw, n)
    fm = replace(cfg.model, seed=derived_seed(cfg.model.seed, _TVLA_FIXED))
    rm = replace(cfg.model, seed=derived_seed(cfg.model.seed, _TVLA_RANDOM))
    fixed = simulate_traces(mapped, lib, fixed_pt, key, fm, (pport, kport))
    rand = simulate_traces(mapped, lib, rand_pt, key, rm, (pport, kport))
    return sca.tvla(fixed, rand, float(cfg.attack.get("threshold", sca.DEFAULT_THRESHOLD)))


def mi_protocol(mapped: Design, lib: CellLibrary, cfg: RunConfig, bins: int | None = None,
                value_range: tuple[float, float] | None = None) -> dict:
    """I(K;L|P) with L the noiseless trace energy, enumerating sub-key and plaintext values.

    Only the attacked sub-key and plaintext bits vary; every other bit is 0.
    One joint histogram per plaintext over a shared binning; the reported
    value is the average over plaintexts.
    """
    bins = int(cfg.mi.get("bins", 16) if bins is None else bins)
    off, w = int(cfg.target["offset"]), int(cfg.target["width"])
    pport, kport = _ports(cfg)
    vals = np.arange(1 << w, dtype=np.uint64) << np.uint64(off)
    pts = np.repeat(vals, len(vals))
    keys = np.tile(vals, len(vals))
    model = replace(cfg.model, noise_sigma=0.0)
    energy = noiseless_power(mapped, lib, pts, keys, model, (pport, kport)).sum(axis=1)
    lo, hi = (float(energy.min()), float(energy.max())) if value_range is None else value_range
    per_p = []
    for i in range(len(vals)):
        sl = slice(i * len(vals), (i + 1) * len(vals))
        per_p.append(sca.estimate_mutual_information(keys[sl], energy[sl], bins, value_range=(lo, hi)))
    return {"mi_bits": float(np.mean(per_p)), "per_plaintext": per_p, "bins": bins, "range": [lo, hi],
            "energy": energy.tolist()}


def compare_mi(run: Run, bins: int | None = None) -> dict:
    """MI of both designs over one shared energy binning."""
    first = {d: mi_protocol(run.mapped[d], run.lib, run.cfg, bins) for d in DESIGNS}
    lo = min(first[d]["range"][0] for d in DESIGNS)
    hi = max(first[d]["range"][1] for d in DESIGNS)
    out = {}
    for d in DESIGNS:
        res = mi_protocol(run.mapped[d], run.lib, run.cfg, bins, (lo, hi))
        res.pop("energy")
        out[d] = res
    out["posyn_lower"] = out["posyn"]["mi_bits"] < out["conventional"]["mi_bits"]
    return out


def gridsearch(cfg: RunConfig, grid=None, attempts: int | None = None) -> dict:
    """Sweep (alpha, beta, gamma) over ``grid``^3 on CPA success rate.

    Weight triples that give identical netlists share one attack run.
    """
    grid = list(cfg.gridsearch.get("grid", DEFAULT_GRID) if grid is None else grid)
    if not grid:
        raise ConfigError("grid search needs a non-empty grid")
    attempts = int(cfg.gridsearch.get("attempts", 10) if attempts is None else attempts)
    lib = _stage("library", cfg.load_library)
    design = _stage("parse", cfg.load_design)
    ann = _stage("annotations", cfg.load_annotations)
    base = synthesize(design, lib, ann, cfg.weights, cfg.sa, cfg.mode, cfg.fanout_threshold)
    conv = base.mapped["conventional"]
    cache: dict[str, dict] = {}
    rows, skipped = [], []
    for a in grid:
        for b in grid:
            for g in grid:
                try:
                    w = CostWeights(a, b, g)
                except ValueError as exc:
                    warnings.warn(f"skipping weights ({a}, {b}, {g}): {exc}")
                    skipped.append([a, b, g])
                    continue
                sol, _, _, _ = map_design(design, lib, ann, w, cfg.sa, cfg.mode, cfg.fanout_threshold)
                text = emit_netlist(design, sol)
                if text not in cache:
                    mapped = parse_netlist(text, lib)
                    rep = verify_design(design, mapped, lib)
                    if not rep.overall:
                        raise EquivalenceFailure("posyn", rep)
                    res = attack_protocol(mapped, lib, cfg, attempts=attempts)
                    cache[text] = {"cpa_success_rate": res["cpa_success_rate"],
                                   "dpa_success_rate": res["dpa_success_rate"],
                                   "netlist_change_percent": sca.netlist_change(conv, mapped)}
                rows.append({"alpha": a, "beta": b, "gamma": g, "total_cost": sol.total_cost, **cache[text]})
    rows.sort(key=lambda r: (r["cpa_success_rate"], r["netlist_change_percent"], r["alpha"], r["beta"], r["gamma"]))
    best = rows[0]
    return {"best": {"alpha": best["alpha"], "beta": best["beta"], "gamma": best["gamma"]},
            "attempts": attempts, "distinct_netlists": len(cache), "skipped": skipped, "sweep": rows}


# ---------------------------------------------------------------------------
# report

def collect_report(out_dir) -> dict:
    """Gather whatever result files a run directory holds."""
    out = Path(out_dir)
    if not (out / "synth.json").is_file():
        raise ConfigError(f"{out} has no synth.json; run 'synth' first")
    rep = {"synth": json.loads((out / "synth.json").read_text())}
    for d in DESIGNS:
        for kind in ("attack", "tvla"):
            p = out / f"{kind}_{d}.json"
            if p.is_file():
                doc = json.loads(p.read_text())
                doc.pop("per_attempt", None)
                doc.pop("t_values", None)
                rep.setdefault(kind, {})[d] = doc
    for kind in ("mi", "gridsearch"):
        p = out / f"{kind}.json"
        if p.is_file():
            doc = json.loads(p.read_text())
            if kind == "gridsearch":
                doc = {k: v for k, v in doc.items() if k != "sweep"}
            else:
                for d in DESIGNS:
                    doc[d].pop("per_plaintext", None)
            rep[kind] = doc
    return rep


def format_report(rep: dict) -> str:
    s = rep["synth"]
    lines = [f"blocks {s['blocks']}, vulnerable {s['vulnerable_blocks']}, mode {s['mode']}",
             f"netlist change {s['netlist_change_percent']:.2f}%"]
    lines.append(f"{'':14s}{'conventional':>14s}{'posyn':>14s}")

    def row(label, get):
        vals = []
        for d in DESIGNS:
            try:
                v = get(d)
            except KeyError:
                v = None
            vals.append("-" if v is None else (f"{v:.4g}" if isinstance(v, float) else str(v)))
        lines.append(f"{label:14s}{vals[0]:>14s}{vals[1]:>14s}")

    row("instances", lambda d: s["instances"][d])
    row("area", lambda d: float(s["area"][d]))
    row("equivalent", lambda d: s["equivalent"][d])
    row("CPA rate", lambda d: float(rep["attack"][d]["cpa_success_rate"]))
    row("DPA rate", lambda d: float(rep["attack"][d]["dpa_success_rate"]))
    row("TVLA max|t|", lambda d: float(rep["tvla"][d]["max_abs_t"]))
    row("MI (bits)", lambda d: float(rep["mi"][d]["mi_bits"]))
    if "gridsearch" in rep:
        b = rep["gridsearch"]["best"]
        lines.append(f"best weights alpha={b['alpha']} beta={b['beta']} gamma={b['gamma']}")
    return "\n".join(lines) + "\n"
