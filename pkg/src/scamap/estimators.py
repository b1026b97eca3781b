"""scikit-learn style wrappers around the mapper and the attacks.

``TechMapper`` is a transformer from a block-level design to a mapped
netlist; the attack classes are fit on (traces, plaintexts) and predict the
sub-key.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import sca
from .flow import SBOXES, synthesize
from .library import CellLibrary, load_library
from .mapper import SAConfig
from .netlist import Design
from .powersim import TraceSet
from .validation import check_design, check_traces, check_weights
from .vulnerability import AnnotationSet


class TechMapper(TransformerMixin, BaseEstimator):
    """Side-channel-aware mapping of one design.

    ``fit`` maps and verifies; ``transform`` returns the mapped netlist text
    (``design="posyn"`` or ``"conventional"``).
    """

    def __init__(self, library="fixture-65", alpha=1.0, beta=1.0, gamma=1.0, mode="replicated",
                 fanout_threshold=4, max_cells=8, iterations=1000, keep_top_k=5, seed=0,
                 annotations=None, design="posyn"):
        self.library = library
        self.alpha = alpha
        self.beta = beta
        self.gamma = gamma
        self.mode = mode
        self.fanout_threshold = fanout_threshold
        self.max_cells = max_cells
        self.iterations = iterations
        self.keep_top_k = keep_top_k
        self.seed = seed
        self.annotations = annotations
        self.design = design

    def _lib(self) -> CellLibrary:
        return self.library if isinstance(self.library, CellLibrary) else load_library(self.library)

    def fit(self, X, y=None):
        lib = self._lib()
        design = check_design(X)
        w = check_weights(self.alpha, self.beta, self.gamma)
        sa = SAConfig(iterations=self.iterations, max_cells=self.max_cells, keep_top_k=self.keep_top_k,
                      seed=self.seed)
        ann = self.annotations if self.annotations is not None else AnnotationSet()
        self.result_ = synthesize(design, lib, ann, w, sa, self.mode, self.fanout_threshold)
        self.source_ = design
        self.solution_ = self.result_.solutions["posyn"]
        self.vulnerable_ = list(self.result_.vulnerable)
        return self

    def transform(self, X) -> str:
        check_is_fitted(self, "result_")
        if self.design not in self.result_.texts:
            raise ValueError(f"design must be one of {sorted(self.result_.texts)}")
        return self.result_.texts[self.design]

    def mapped_design(self) -> Design:
        check_is_fitted(self, "result_")
        return self.result_.mapped[self.design]


class _SubkeyAttack(BaseEstimator):
    def __init__(self, sbox="present", offset=0, width=None):
        self.sbox = sbox
        self.offset = offset
        self.width = width

    def _table(self):
        return SBOXES[self.sbox] if isinstance(self.sbox, str) else self.sbox

    def _run(self, ts: TraceSet) -> sca.AttackResult:
        raise NotImplementedError

    def fit(self, X, y, key=None):
        """X: traces (n, samples); y: plaintext words; ``key`` only fills ``result_.true_key``."""
        traces, pts = check_traces(X, y)
        ts = TraceSet(pts, 0 if key is None else int(key), traces)
        res = self._run(ts)
        if key is None:
            res = sca.AttackResult(res.ranked_keys, res.statistics, None)
        self.result_ = res
        self.key_ = res.best_key
        self.ranking_ = np.asarray(res.ranked_keys)
        self.scores_ = np.asarray(res.statistics)
        return self

    def predict(self, X=None) -> int:
        check_is_fitted(self, "key_")
        return self.key_


class CPAAttack(_SubkeyAttack):
    def _run(self, ts):
        return sca.cpa_attack(ts, self._table(), self.offset, self.width)


class DPAAttack(_SubkeyAttack):
    def __init__(self, sbox="present", offset=0, width=None, bit_index=0):
        super().__init__(sbox, offset, width)
        self.bit_index = bit_index

    def _run(self, ts):
        return sca.dpa_attack(ts, self.bit_index, self._table(), self.offset, self.width)


class TVLA(BaseEstimator):
    """Fit on fixed-class traces ``X`` and random-class traces ``y``."""

    def __init__(self, threshold=sca.DEFAULT_THRESHOLD):
        self.threshold = threshold

    def fit(self, X, y):
        fixed, _ = check_traces(X)
        rand, _ = check_traces(y)
        self.result_ = sca.tvla(fixed, rand, self.threshold)
        self.t_values_ = np.array([np.nan if t is None else t for t in self.result_.t_values])
        self.max_abs_t_ = self.result_.max_abs_t
        return self

    def predict(self, X=None) -> bool:
        """True when some sample exceeds the threshold."""
        check_is_fitted(self, "result_")
        return self.result_.leaks
