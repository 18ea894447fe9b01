"""Reaction-yield surrogate for palladium-catalyzed cross-coupling screens.

Fits a structured endpoint model from a table of categorical reaction
recipes and their observed yields: a global mean, per-component main
effects, pair and three-way interaction corrections, exact memorization of
observed recipes, a hybrid failure model (empirical component rates plus
chemistry heuristics), and a 40-bin heteroscedastic residual-variance
table.  Sampling from the fitted model produces synthetic reaction
corpora, stratified over memorized, perturbed-high-yield, and uniform
recipes, then z-score calibrated to target summary statistics.
"""
import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import FitError, ParameterError, SchemaError
from .stochastics import substream

CATEGORIES = ("aryl_halide", "boronate", "ligand", "base", "solvent")
PAIR_SPECS = (("aryl_halide", "ligand"), ("base", "boronate"), ("ligand", "solvent"))
THREEWAY_SPECS = (("aryl_halide", "ligand", "solvent"),)
MIN_SUPPORT_DEFAULT = 3
N_VARIANCE_BINS = 40
FAILURE_THRESHOLD = 0.05
FAILURE_YIELD_RANGE = (0.001, 0.04)
YIELD_FLOOR = 0.001
YIELD_CEILING = 0.999
EMPIRICAL_FAILURE_WEIGHT = 0.6
FAILURE_PROB_CEILING = 0.95
CALIBRATION_TARGET_MEAN = 0.62
CALIBRATION_TARGET_STD = 0.28
STRATUM_FRACTIONS = {"memorized": 0.60, "partial": 0.30, "uniform": 0.10}
PARTIAL_SOURCE_PERCENTILE = 75.0

STRONG_BASES = frozenset({"NaOtBu", "KOH"})
WEAK_BASES = frozenset({"NaHCO3", "Et3N"})
WEAK_LIGANDS = frozenset({"PPh3", "None"})
LOW_ACTIVITY_LIGANDS = frozenset({"PPh3", "None"})
TRIFLUOROBORATE_BORONATES = frozenset({"PhBF3K"})
ARYL_CHLORIDES = frozenset({"PhCl", "4-CF3PhCl", "4-CNPhCl"})


class ReactionTuple(NamedTuple):
    aryl_halide: str
    boronate: str
    ligand: str
    base: str
    solvent: str


@dataclass
class HeuristicRule:
    """Failure-probability boost that fires when every condition matches."""

    name: str
    conditions: dict          # category -> frozenset of member values
    boost: float


def default_heuristic_rules() -> tuple:
    return (
        HeuristicRule("strong_base_weak_ligand",
                      {"base": STRONG_BASES, "ligand": WEAK_LIGANDS}, 0.35),
        HeuristicRule("trifluoroborate_weak_base",
                      {"boronate": TRIFLUOROBORATE_BORONATES, "base": WEAK_BASES}, 0.30),
        HeuristicRule("aryl_chloride_low_activity_ligand",
                      {"aryl_halide": ARYL_CHLORIDES, "ligand": LOW_ACTIVITY_LIGANDS}, 0.25),
    )


@dataclass
class ChemDataset:
    """Reaction recipes with yields and per-row provenance tags."""

    tuples: list
    yields: np.ndarray
    provenance: tuple

    def __post_init__(self):
        self.yields = np.asarray(self.yields, dtype=float)
        if not (len(self.tuples) == len(self.yields) == len(self.provenance)):
            raise ParameterError("tuples, yields, and provenance must align")
        if len(self.yields) and (np.any(~np.isfinite(self.yields))
                                 or np.any(self.yields < 0) or np.any(self.yields > 1)):
            raise ParameterError("yields must be finite and within [0, 1]")

    def __len__(self):
        return len(self.tuples)


@dataclass
class ChemYieldModel:
    """Fitted structured yield model plus failure and noise components."""

    vocabulary: dict                    # category -> tuple of values
    global_mean: float
    main_effects: dict                  # category -> {value: effect}
    pair_interactions: dict             # (catA, catB) -> {(va, vb): delta}
    threeway_interactions: dict         # (catA, catB, catC) -> {(va, vb, vc): delta}
    memorized: dict                     # ReactionTuple -> (mean, variance, count)
    component_failure_rates: dict       # category -> {value: rate}
    heuristic_rules: tuple
    empirical_failure_weight: float
    variance_bins: np.ndarray           # (n_bins, 2): upper edge, residual variance
    calibration_mean: float
    calibration_std: float
    _index: dict = field(default=None, repr=False)
    _caches: dict = field(default=None, repr=False)

    def __post_init__(self):
        self._index = {cat: {v: i for i, v in enumerate(vals)}
                       for cat, vals in self.vocabulary.items()}
        self._build_caches()

    def _build_caches(self):
        """Dense per-index arrays so corpus sampling can vectorize."""
        sizes = {cat: len(vals) for cat, vals in self.vocabulary.items()}
        main = {cat: np.array([self.main_effects[cat].get(v, 0.0)
                               for v in self.vocabulary[cat]])
                for cat in CATEGORIES}
        pair = {}
        for (ca, cb), table in self.pair_interactions.items():
            arr = np.zeros((sizes[ca], sizes[cb]))
            for (va, vb), delta in table.items():
                arr[self._index[ca][va], self._index[cb][vb]] = delta
            pair[(ca, cb)] = arr
        threeway = {}
        for (ca, cb, cc), table in self.threeway_interactions.items():
            arr = np.zeros((sizes[ca], sizes[cb], sizes[cc]))
            for (va, vb, vc), delta in table.items():
                arr[self._index[ca][va], self._index[cb][vb], self._index[cc][vc]] = delta
            threeway[(ca, cb, cc)] = arr
        fail = {cat: np.array([self.component_failure_rates[cat].get(v, 0.0)
                               for v in self.vocabulary[cat]])
                for cat in CATEGORIES}
        rules = []
        for rule in self.heuristic_rules:
            masks = {cat: np.array([v in members for v in self.vocabulary[cat]])
                     for cat, members in rule.conditions.items()}
            rules.append((masks, rule.boost))
        shape = tuple(sizes[cat] for cat in CATEGORIES)
        mem_mean = np.full(shape, np.nan)
        for t, (mean, _, _) in self.memorized.items():
            mem_mean[self._tuple_index(t)] = mean
        self._caches = dict(main=main, pair=pair, threeway=threeway,
                            fail=fail, rules=rules, mem_mean=mem_mean)

    def _tuple_index(self, t: ReactionTuple) -> tuple:
        try:
            return tuple(self._index[cat][getattr(t, cat)] for cat in CATEGORIES)
        except KeyError as err:
            raise SchemaError(f"component not in model vocabulary: {err.args[0]!r}") from None

    def tuple_from_index(self, idx) -> ReactionTuple:
        return ReactionTuple(*(self.vocabulary[cat][int(i)]
                               for cat, i in zip(CATEGORIES, idx)))


def load_reactions_csv(path) -> ChemDataset:
    """Read an empirical reaction table; rows with missing yields drop."""
    tuples, yields = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in (*CATEGORIES, "yield") if c not in (reader.fieldnames or [])]
        if missing:
            raise SchemaError(f"reaction CSV lacks columns: {missing}")
        for row in reader:
            raw = (row["yield"] or "").strip()
            if not raw:
                continue
            tuples.append(ReactionTuple(*(row[c].strip() for c in CATEGORIES)))
            yields.append(float(raw))
    return ChemDataset(tuples, np.array(yields), ("empirical",) * len(tuples))


_STANDIN_VOCAB = {
    "aryl_halide": ("PhI", "PhBr", "4-MeOPhBr", "2-MePhBr", "3-PyBr",
                    "PhCl", "4-CF3PhCl", "4-CNPhCl"),
    "boronate": ("PhB(OH)2", "4-MePhB(OH)2", "PhBpin", "VinylBpin",
                 "2-FurylB(OH)2", "PhBF3K"),
    "ligand": ("SPhos", "XPhos", "RuPhos", "BrettPhos", "PtBu3", "CataCXiumA",
               "dtbpf", "dppf", "PCy3", "Xantphos", "PPh3", "None"),
    "base": ("K3PO4", "KOH", "NaOtBu", "Et3N", "NaHCO3"),
    "solvent": ("MeCN", "THF"),
}
_STANDIN_EFFECTS = {
    "aryl_halide": {"PhI": 0.13, "PhBr": 0.10, "4-MeOPhBr": 0.03, "2-MePhBr": -0.05,
                    "3-PyBr": -0.08, "PhCl": -0.13, "4-CF3PhCl": -0.03, "4-CNPhCl": 0.00},
    "boronate": {"PhB(OH)2": 0.08, "4-MePhB(OH)2": 0.05, "PhBpin": 0.00,
                 "VinylBpin": -0.04, "2-FurylB(OH)2": -0.10, "PhBF3K": -0.05},
    "ligand": {"SPhos": 0.16, "XPhos": 0.16, "RuPhos": 0.13, "BrettPhos": 0.10,
               "PtBu3": 0.08, "CataCXiumA": 0.06, "dtbpf": 0.03, "dppf": 0.00,
               "PCy3": -0.03, "Xantphos": -0.10, "PPh3": -0.21, "None": -0.39},
    "base": {"K3PO4": 0.10, "KOH": 0.05, "NaOtBu": 0.00, "Et3N": -0.10, "NaHCO3": -0.13},
    "solvent": {"MeCN": 0.03, "THF": -0.03},
}
_STANDIN_PAIRS = {
    ("aryl_halide", "ligand"): {("4-CNPhCl", "XPhos"): 0.15, ("PhCl", "SPhos"): 0.13,
                                ("3-PyBr", "dppf"): 0.08},
    ("base", "boronate"): {("K3PO4", "PhBF3K"): 0.10, ("NaHCO3", "2-FurylB(OH)2"): -0.10},
    ("ligand", "solvent"): {("Xantphos", "THF"): 0.08},
}
_STANDIN_THREEWAYS = {("PhBr", "SPhos", "MeCN"): 0.08, ("PhCl", "PPh3", "THF"): -0.10}
_STANDIN_ANCHOR = 0.76
_STANDIN_NOISE_SD = 0.07
_STANDIN_BASE_FAILURE = 0.007
_STANDIN_COMBO_FAILURE = (
    (("base", STRONG_BASES), ("ligand", WEAK_LIGANDS), 0.15),
    (("boronate", TRIFLUOROBORATE_BORONATES), ("base", WEAK_BASES), 0.14),
    (("aryl_halide", ARYL_CHLORIDES), ("ligand", LOW_ACTIVITY_LIGANDS), 0.11),
)


def standin_reactions(rng=None) -> ChemDataset:
    """Bundled stand-in screen used when no empirical table is supplied.

    A full factorial over a plausible vocabulary (5760 recipes) with
    planted main effects, interactions, failure-prone combinations, and
    homoscedastic noise, shaped so the fitted model's calibrated corpora
    hit the documented summary targets.
    """
    if rng is None:
        rng = substream(2018, 0)
    tuples = []
    for a in _STANDIN_VOCAB["aryl_halide"]:
        for b in _STANDIN_VOCAB["boronate"]:
            for lig in _STANDIN_VOCAB["ligand"]:
                for base in _STANDIN_VOCAB["base"]:
                    for solv in _STANDIN_VOCAB["solvent"]:
                        tuples.append(ReactionTuple(a, b, lig, base, solv))
    yields = np.empty(len(tuples))
    for i, t in enumerate(tuples):
        p_fail = _STANDIN_BASE_FAILURE
        for (cat1, set1), (cat2, set2), prob in _STANDIN_COMBO_FAILURE:
            if getattr(t, cat1) in set1 and getattr(t, cat2) in set2:
                p_fail += prob
        if rng.random() < min(p_fail, 0.9):
            yields[i] = rng.uniform(YIELD_FLOOR, FAILURE_THRESHOLD - 0.005)
            continue
        y = _STANDIN_ANCHOR
        for cat in CATEGORIES:
            y += _STANDIN_EFFECTS[cat][getattr(t, cat)]
        for (ca, cb), table in _STANDIN_PAIRS.items():
            y += table.get((getattr(t, ca), getattr(t, cb)), 0.0)
        y += _STANDIN_THREEWAYS.get((t.aryl_halide, t.ligand, t.solvent), 0.0)
        yields[i] = min(max(y + rng.normal(0.0, _STANDIN_NOISE_SD), YIELD_FLOOR),
                        YIELD_CEILING)
    return ChemDataset(tuples, yields, ("empirical",) * len(tuples))


def fit_effects(data: ChemDataset):
    """Grand mean and per-component main effects (group mean minus grand mean)."""
    if len(data) == 0:
        raise FitError("cannot fit effects on an empty dataset")
    mu = float(data.yields.mean())
    effects = {}
    for pos, cat in enumerate(CATEGORIES):
        values = [t[pos] for t in data.tuples]
        table = {}
        for v in sorted(set(values)):
            mask = np.array([x == v for x in values])
            table[v] = float(data.yields[mask].mean() - mu)
        effects[cat] = table
    return mu, effects


def fit_interactions(data: ChemDataset, global_mean, main_effects,
                     min_support: int = MIN_SUPPORT_DEFAULT):
    """Pair and three-way residual corrections with support filtering.

    Pair terms are residual means after the main effects; three-way terms
    are residual means after main and pair terms.  Combinations observed
    fewer than min_support times are omitted.
    """
    if min_support < 1:
        raise ParameterError("min_support must be >= 1")
    resid = data.yields - global_mean
    for pos, cat in enumerate(CATEGORIES):
        resid = resid - np.array([main_effects[cat][t[pos]] for t in data.tuples])

    pairs = {}
    for ca, cb in PAIR_SPECS:
        ia, ib = CATEGORIES.index(ca), CATEGORIES.index(cb)
        groups = {}
        for row, t in enumerate(data.tuples):
            groups.setdefault((t[ia], t[ib]), []).append(row)
        pairs[(ca, cb)] = {key: float(resid[rows].mean())
                           for key, rows in groups.items() if len(rows) >= min_support}

    resid2 = resid.copy()
    for (ca, cb), table in pairs.items():
        ia, ib = CATEGORIES.index(ca), CATEGORIES.index(cb)
        resid2 = resid2 - np.array([table.get((t[ia], t[ib]), 0.0) for t in data.tuples])

    threeways = {}
    for ca, cb, cc in THREEWAY_SPECS:
        ia, ib, ic = (CATEGORIES.index(c) for c in (ca, cb, cc))
        groups = {}
        for row, t in enumerate(data.tuples):
            groups.setdefault((t[ia], t[ib], t[ic]), []).append(row)
        threeways[(ca, cb, cc)] = {key: float(resid2[rows].mean())
                                   for key, rows in groups.items()
                                   if len(rows) >= min_support}
    return pairs, threeways


def fit_failure_rates(data: ChemDataset):
    """Per-component empirical failure rates (fraction of yields below 5%)."""
    failed = data.yields < FAILURE_THRESHOLD
    rates = {}
    for pos, cat in enumerate(CATEGORIES):
        values = [t[pos] for t in data.tuples]
        table = {}
        for v in sorted(set(values)):
            mask = np.array([x == v for x in values])
            table[v] = float(failed[mask].mean())
        rates[cat] = table
    return rates


def fit_variance_bins(data: ChemDataset, model: ChemYieldModel,
                      n_bins: int = N_VARIANCE_BINS) -> np.ndarray:
    """Equal-count residual-variance bins over structured predictions.

    Residuals are taken against the structured (non-memorized) prediction,
    since memorization reproduces every observed row exactly and would
    leave nothing to bin.  Returns (n_bins, 2) rows of (upper edge,
    residual variance); the final upper edge is pinned to 1.0.
    """
    if len(data) < n_bins:
        raise FitError(f"need at least {n_bins} rows to fit {n_bins} variance bins")
    preds = np.array([structured_yield(t, model) for t in data.tuples])
    resid = data.yields - preds
    order = np.argsort(preds, kind="stable")
    bins = np.empty((n_bins, 2))
    for k, rows in enumerate(np.array_split(order, n_bins)):
        bins[k, 0] = preds[rows].max()
        bins[k, 1] = resid[rows].var()
    bins[-1, 0] = 1.0
    return bins


def fit_chem_model(data: ChemDataset, min_support: int = MIN_SUPPORT_DEFAULT,
                   target_mean: float = CALIBRATION_TARGET_MEAN,
                   target_std: float = CALIBRATION_TARGET_STD,
                   empirical_failure_weight: float = EMPIRICAL_FAILURE_WEIGHT,
                   rules=None) -> ChemYieldModel:
    """Fit every model component from one reaction table."""
    mu, main = fit_effects(data)
    pairs, threeways = fit_interactions(data, mu, main, min_support)
    memorized = {}
    groups = {}
    for row, t in enumerate(data.tuples):
        groups.setdefault(t, []).append(row)
    for t, rows in groups.items():
        ys = data.yields[rows]
        memorized[t] = (float(ys.mean()), float(ys.var()), len(rows))
    vocabulary = {cat: tuple(sorted(main[cat])) for cat in CATEGORIES}
    model = ChemYieldModel(
        vocabulary=vocabulary,
        global_mean=mu,
        main_effects=main,
        pair_interactions=pairs,
        threeway_interactions=threeways,
        memorized=memorized,
        component_failure_rates=fit_failure_rates(data),
        heuristic_rules=default_heuristic_rules() if rules is None else tuple(rules),
        empirical_failure_weight=empirical_failure_weight,
        variance_bins=np.zeros((1, 2)),
        calibration_mean=target_mean,
        calibration_std=target_std,
    )
    model.variance_bins = fit_variance_bins(data, model)
    return model


def structured_yield(t: ReactionTuple, model: ChemYieldModel) -> float:
    """Composite prediction from fitted effects alone, clipped to [0, 1]."""
    idx = model._tuple_index(t)
    c = model._caches
    y = model.global_mean
    for pos, cat in enumerate(CATEGORIES):
        y += c["main"][cat][idx[pos]]
    for (ca, cb), arr in c["pair"].items():
        y += arr[idx[CATEGORIES.index(ca)], idx[CATEGORIES.index(cb)]]
    for (ca, cb, cc), arr in c["threeway"].items():
        y += arr[idx[CATEGORIES.index(ca)], idx[CATEGORIES.index(cb)],
                 idx[CATEGORIES.index(cc)]]
    return min(max(y, 0.0), 1.0)


def predict_base_yield(t: ReactionTuple, model: ChemYieldModel) -> float:
    """Memorized recipes return their stored mean; others the structured sum."""
    stored = model.memorized.get(t)
    if stored is not None:
        model._tuple_index(t)
        return stored[0]
    return structured_yield(t, model)


def failure_probability(t: ReactionTuple, model: ChemYieldModel) -> float:
    """Weighted empirical component rates plus triggered heuristic boosts."""
    idx = model._tuple_index(t)
    c = model._caches
    rate = np.mean([c["fail"][cat][idx[pos]] for pos, cat in enumerate(CATEGORIES)])
    p = model.empirical_failure_weight * rate
    for masks, boost in c["rules"]:
        if all(masks[cat][idx[CATEGORIES.index(cat)]] for cat in masks):
            p += boost
    return min(max(p, 0.0), FAILURE_PROB_CEILING)


def variance_for_prediction(model: ChemYieldModel, yhat: float) -> float:
    """Residual variance of the bin containing (or nearest to) yhat."""
    edges = model.variance_bins[:, 0]
    k = int(np.searchsorted(edges, yhat, side="left"))
    return float(model.variance_bins[min(k, len(edges) - 1), 1])


def sample_reaction_yield(t: ReactionTuple, model: ChemYieldModel, rng) -> float:
    """One uncalibrated synthetic yield for a recipe."""
    if rng.random() < failure_probability(t, model):
        return float(rng.uniform(*FAILURE_YIELD_RANGE))
    yhat = predict_base_yield(t, model)
    y = rng.normal(yhat, math.sqrt(variance_for_prediction(model, yhat)))
    return min(max(y, YIELD_FLOOR), YIELD_CEILING)


def calibrate_yields(yields: np.ndarray, target_mean: float,
                     target_std: float) -> np.ndarray:
    """Affine z-score map onto target summary statistics, then clipping.

    Rank order is preserved up to the clip, because the map is affine with
    positive slope.
    """
    yields = np.asarray(yields, dtype=float)
    std = yields.std()
    if std == 0:
        raise FitError("cannot calibrate a zero-variance yield sample")
    mapped = target_mean + target_std * (yields - yields.mean()) / std
    return np.clip(mapped, YIELD_FLOOR, YIELD_CEILING)


def _indices_structured(model: ChemYieldModel, idx: np.ndarray) -> np.ndarray:
    """Vectorized structured prediction for an (n, 5) index array."""
    c = model._caches
    y = np.full(len(idx), model.global_mean)
    for pos, cat in enumerate(CATEGORIES):
        y += c["main"][cat][idx[:, pos]]
    for (ca, cb), arr in c["pair"].items():
        y += arr[idx[:, CATEGORIES.index(ca)], idx[:, CATEGORIES.index(cb)]]
    for (ca, cb, cc), arr in c["threeway"].items():
        y += arr[idx[:, CATEGORIES.index(ca)], idx[:, CATEGORIES.index(cb)],
                 idx[:, CATEGORIES.index(cc)]]
    return np.clip(y, 0.0, 1.0)


def _indices_failure(model: ChemYieldModel, idx: np.ndarray) -> np.ndarray:
    c = model._caches
    rate = np.zeros(len(idx))
    for pos, cat in enumerate(CATEGORIES):
        rate += c["fail"][cat][idx[:, pos]]
    p = model.empirical_failure_weight * rate / len(CATEGORIES)
    for masks, boost in c["rules"]:
        hit = np.ones(len(idx), dtype=bool)
        for cat, mask in masks.items():
            hit &= mask[idx[:, CATEGORIES.index(cat)]]
        p += boost * hit
    return np.clip(p, 0.0, FAILURE_PROB_CEILING)


def sample_corpus_rows(model: ChemYieldModel, n: int, rng):
    """Draw n stratified raw (uncalibrated) corpus rows.

    Strata: memorized recipes resampled uniformly; high-yield partial
    recipes (a memorized recipe above the 75th-percentile stored yield
    with base or solvent resampled); uniform recipes over the full
    combinatorial space.  Returns (index array, raw yields, provenance).
    """
    c = model._caches
    mem_flat = np.flatnonzero(~np.isnan(c["mem_mean"]).ravel())
    if len(mem_flat) == 0:
        raise FitError("model has no memorized recipes to sample from")
    shape = c["mem_mean"].shape
    mem_means = c["mem_mean"].ravel()[mem_flat]
    cut = np.percentile(mem_means, PARTIAL_SOURCE_PERCENTILE)
    top = mem_flat[mem_means > cut]
    if len(top) == 0:
        top = mem_flat[mem_means >= cut]

    labels = ("memorized", "partial", "uniform")
    probs = [STRATUM_FRACTIONS[s] for s in labels]
    stratum = rng.choice(3, size=n, p=probs)
    idx = np.empty((n, len(CATEGORIES)), dtype=np.int64)

    mem_rows = np.flatnonzero(stratum == 0)
    picks = mem_flat[rng.integers(0, len(mem_flat), len(mem_rows))]
    idx[mem_rows] = np.column_stack(np.unravel_index(picks, shape))

    part_rows = np.flatnonzero(stratum == 1)
    picks = top[rng.integers(0, len(top), len(part_rows))]
    idx[part_rows] = np.column_stack(np.unravel_index(picks, shape))
    swap_base = rng.random(len(part_rows)) < 0.5
    base_pos, solv_pos = CATEGORIES.index("base"), CATEGORIES.index("solvent")
    n_base = len(model.vocabulary["base"])
    n_solv = len(model.vocabulary["solvent"])
    new_base = rng.integers(0, n_base, len(part_rows))
    new_solv = rng.integers(0, n_solv, len(part_rows))
    idx[part_rows[swap_base], base_pos] = new_base[swap_base]
    idx[part_rows[~swap_base], solv_pos] = new_solv[~swap_base]

    uni_rows = np.flatnonzero(stratum == 2)
    for pos, cat in enumerate(CATEGORIES):
        idx[uni_rows, pos] = rng.integers(0, len(model.vocabulary[cat]), len(uni_rows))

    yhat = _indices_structured(model, idx)
    mem_lookup = c["mem_mean"][tuple(idx.T)]
    known = ~np.isnan(mem_lookup)
    yhat[known] = mem_lookup[known]

    p_fail = _indices_failure(model, idx)
    fails = rng.random(n) < p_fail
    raw = np.empty(n)
    raw[fails] = rng.uniform(*FAILURE_YIELD_RANGE, fails.sum())
    ok = ~fails
    edges = model.variance_bins[:, 0]
    bin_of = np.minimum(np.searchsorted(edges, yhat[ok], side="left"), len(edges) - 1)
    sigma = np.sqrt(model.variance_bins[bin_of, 1])
    raw[ok] = np.clip(rng.normal(yhat[ok], sigma), YIELD_FLOOR, YIELD_CEILING)
    return idx, raw, tuple(labels[s] for s in stratum)


def generate_chem_corpus(model: ChemYieldModel, n: int, rng) -> ChemDataset:
    """Stratified synthetic corpus, z-score calibrated to the model targets."""
    if n < 2:
        raise ParameterError("corpus needs at least 2 rows to calibrate")
    idx, raw, provenance = sample_corpus_rows(model, n, rng)
    calibrated = calibrate_yields(raw, model.calibration_mean, model.calibration_std)
    tuples = [model.tuple_from_index(row) for row in idx]
    return ChemDataset(tuples, calibrated, provenance)
