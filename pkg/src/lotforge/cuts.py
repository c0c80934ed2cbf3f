"""Valid-inequality separation and the root cutting-plane driver.

Six families are separated by inspection: single-, two- and three-level
inequalities, each in the standard space (per facility, using aggregated
demands) and in the retailer-disaggregated space (per retailer). For
fixed structural parameters (facility or retailer, horizon prefix l and
the level split points), each period slot independently contributes the
smaller of its flow term and its demand-scaled setup term, which yields
the most violated member of the family; ties go to the setup term.

The driver never solves LPs itself: it pulls relaxation points from an
injected callback and accumulates all violated cuts, deduplicated by
(family, parameters).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .formulations import Constraint, MipModel, VarId, VarValueMap
from .instance import Instance, cumulative_demand

DEFAULT_VIOLATION_TOL = 10.0
DEFAULT_MAX_ROUNDS = 20
DEFAULT_TWO_LEVEL_EVERY = 5
DEFAULT_THREE_LEVEL_EVERY = 10


@dataclass(frozen=True)
class CutConfig:
    violation_tol: float = DEFAULT_VIOLATION_TOL
    max_rounds: int = DEFAULT_MAX_ROUNDS
    two_level_every: int = DEFAULT_TWO_LEVEL_EVERY
    three_level_every: int = DEFAULT_THREE_LEVEL_EVERY

    def __post_init__(self):
        if self.violation_tol <= 0 or self.two_level_every <= 0 \
                or self.three_level_every <= 0 or self.max_rounds < 0:
            raise ValueError("cut configuration values must be positive")


@dataclass
class Cut:
    family: str  # SL_STD, TL_STD, THL_STD, SL_3LF, TL_3LF, THL_3LF
    params: tuple
    coefs: dict[VarId, float]
    rhs: float
    sense: str = ">="

    def key(self) -> tuple:
        return (self.family, self.params)


def eval_inequality(cut: Cut, point: VarValueMap) -> float:
    """Signed slack lhs - rhs; >= 0 means the point satisfies the cut."""
    lhs = 0.0
    for var, coef in cut.coefs.items():
        if var not in point:
            raise KeyError(f"point is missing variable {var.name()}")
        lhs += coef * point[var]
    return lhs - cut.rhs


# --------------------------------------------------------------------------
# Slot inspection shared by every family.

def _facilities(instance: Instance) -> list[tuple[int, int, int]]:
    """(flat index, level, ordinal-within-level) for every facility."""
    out = []
    for fac in range(instance.num_facilities):
        out.append((fac, instance.level(fac), instance.facility_id(fac).index))
    return out


class _StdSlots:
    """Termwise min over (x, d*y) slots of one facility in STD space."""

    def __init__(self, instance, cum, point):
        self.cum = cum
        self.point = point

    def best(self, fac_key, fac_flat, k, l):
        b, idx = fac_key
        dkl = self.cum.table[fac_flat, k, l]
        xv = self.point.get(VarId("x", b, idx, k), 0.0)
        yv = self.point.get(VarId("y", b, idx, k), 0.0)
        setup_term = dkl * yv
        if setup_term <= xv:
            return setup_term, True
        return xv, False


def _mask_terms_std(instance, cum, fac, lo, hi, l, S_mask, coefs):
    """Append the chosen x/y terms of facility fac over periods lo..hi."""
    b, idx = instance.level(fac), instance.facility_id(fac).index
    for k in range(lo, hi + 1):
        if S_mask >> k & 1:
            coefs[VarId("y", b, idx, k)] = coefs.get(VarId("y", b, idx, k), 0.0) \
                + cum.table[fac, k, l]
        else:
            coefs[VarId("x", b, idx, k)] = coefs.get(VarId("x", b, idx, k), 0.0) + 1.0


def _inspect_segment_std(slots, instance, fac, lo, hi, l):
    """Sum of termwise minima and the chosen S bitmask for one segment."""
    key = (instance.level(fac), instance.facility_id(fac).index)
    total, mask = 0.0, 0
    for k in range(lo, hi + 1):
        val, in_S = slots.best(key, fac, k, l)
        total += val
        if in_S:
            mask |= 1 << k
    return total, mask


def separate_single_level_std(instance: Instance, point: VarValueMap,
                              tol: float = DEFAULT_VIOLATION_TOL) -> list[Cut]:
    cum = cumulative_demand(instance)
    slots = _StdSlots(instance, cum, point)
    cuts = []
    for fac in range(instance.num_facilities):
        for l in range(instance.num_periods):
            rhs = cum.table[fac, 0, l]
            if rhs <= tol:
                continue
            total, mask = _inspect_segment_std(slots, instance, fac, 0, l, l)
            if rhs - total > tol:
                cuts.append(make_single_level_std_cut(instance, cum, fac, l, mask))
    return cuts


def make_single_level_std_cut(instance, cum, fac, l, S_mask) -> Cut:
    coefs: dict[VarId, float] = {}
    _mask_terms_std(instance, cum, fac, 0, l, l, S_mask, coefs)
    b, idx = instance.level(fac), instance.facility_id(fac).index
    return Cut("SL_STD", (b, idx, l, S_mask), coefs, float(cum.table[fac, 0, l]))


def _two_level_pairs(instance: Instance) -> list[tuple[int, list[int]]]:
    """(facility, successor facilities at the lower level) pairs: plant with
    all warehouses, plant with all retailers, each warehouse with its own
    retailers."""
    pairs = [(0, [instance.warehouse(w) for w in range(instance.num_warehouses)]),
             (0, [instance.retailer(r) for r in range(instance.num_retailers)])]
    for w in range(instance.num_warehouses):
        succ = [instance.retailer(r) for r in instance.retailers_of(w)]
        pairs.append((instance.warehouse(w), succ))
    return pairs


def separate_two_level_std(instance: Instance, point: VarValueMap,
                           tol: float = DEFAULT_VIOLATION_TOL) -> list[Cut]:
    cum = cumulative_demand(instance)
    slots = _StdSlots(instance, cum, point)
    cuts = []
    for fac, succ in _two_level_pairs(instance):
        if not succ:
            continue
        lower = instance.level(succ[0])
        for l in range(1, instance.num_periods):
            rhs = cum.table[fac, 0, l]
            if rhs <= tol:
                continue
            for li in range(l):
                total, upper_mask = _inspect_segment_std(slots, instance, fac, 0, li, l)
                succ_masks = []
                for j in succ:
                    val, mask = _inspect_segment_std(slots, instance, j, li + 1, l, l)
                    total += val
                    succ_masks.append(mask)
                if rhs - total > tol:
                    cuts.append(make_two_level_std_cut(
                        instance, cum, fac, lower, l, li, upper_mask,
                        tuple(succ_masks)))
    return cuts


def make_two_level_std_cut(instance, cum, fac, lower_level, l, li,
                           upper_mask, succ_masks) -> Cut:
    coefs: dict[VarId, float] = {}
    _mask_terms_std(instance, cum, fac, 0, li, l, upper_mask, coefs)
    succ = _successors_of(instance, fac, lower_level)
    for j, mask in zip(succ, succ_masks):
        _mask_terms_std(instance, cum, j, li + 1, l, l, mask, coefs)
    b, idx = instance.level(fac), instance.facility_id(fac).index
    return Cut("TL_STD", (b, idx, lower_level, l, li, upper_mask, succ_masks),
               coefs, float(cum.table[fac, 0, l]))


def _successors_of(instance: Instance, fac: int, lower_level: int) -> list[int]:
    for f, succ in _two_level_pairs(instance):
        if f == fac and succ and instance.level(succ[0]) == lower_level:
            return succ
    raise ValueError(f"no successors of facility {fac} at level {lower_level}")


def separate_three_level_std(instance: Instance, point: VarValueMap,
                             tol: float = DEFAULT_VIOLATION_TOL) -> list[Cut]:
    cum = cumulative_demand(instance)
    slots = _StdSlots(instance, cum, point)
    warehouses = [instance.warehouse(w) for w in range(instance.num_warehouses)]
    retailers = [instance.retailer(r) for r in range(instance.num_retailers)]
    cuts = []
    for l in range(2, instance.num_periods):
        rhs = cum.table[0, 0, l]
        if rhs <= tol:
            continue
        for lp in range(l - 1):
            plant_total, plant_mask = _inspect_segment_std(slots, instance, 0, 0, lp, l)
            for lw in range(lp + 1, l):
                total = plant_total
                w_masks, r_masks = [], []
                for j in warehouses:
                    val, mask = _inspect_segment_std(slots, instance, j, lp + 1, lw, l)
                    total += val
                    w_masks.append(mask)
                for j in retailers:
                    val, mask = _inspect_segment_std(slots, instance, j, lw + 1, l, l)
                    total += val
                    r_masks.append(mask)
                if rhs - total > tol:
                    cuts.append(make_three_level_std_cut(
                        instance, cum, l, lp, lw, plant_mask,
                        tuple(w_masks), tuple(r_masks)))
    return cuts


def make_three_level_std_cut(instance, cum, l, lp, lw, plant_mask,
                             w_masks, r_masks) -> Cut:
    coefs: dict[VarId, float] = {}
    _mask_terms_std(instance, cum, 0, 0, lp, l, plant_mask, coefs)
    for w, mask in enumerate(w_masks):
        _mask_terms_std(instance, cum, instance.warehouse(w), lp + 1, lw, l, mask, coefs)
    for r, mask in enumerate(r_masks):
        _mask_terms_std(instance, cum, instance.retailer(r), lw + 1, l, l, mask, coefs)
    return Cut("THL_STD", (l, lp, lw, plant_mask, w_masks, r_masks),
               coefs, float(cum.table[0, 0, l]))


# --------------------------------------------------------------------------
# Retailer-disaggregated (3LF) space.

def _pred_y(instance: Instance, r: int, b: int, k: int) -> VarId:
    if b == 0:
        return VarId("y", 0, 0, k)
    if b == 1:
        return VarId("y", 1, int(instance.retailer_warehouse[r]), k)
    return VarId("y", 2, r, k)


def _inspect_segment_3lf(instance, cum, point, r, b, lo, hi, l):
    rfac = instance.retailer(r)
    total, mask = 0.0, 0
    for k in range(lo, hi + 1):
        dkl = cum.table[rfac, k, l]
        xv = point.get(VarId("x3", b, r, k), 0.0)
        yv = point.get(_pred_y(instance, r, b, k), 0.0)
        setup_term = dkl * yv
        if setup_term <= xv:
            total += setup_term
            mask |= 1 << k
        else:
            total += xv
    return total, mask


def _mask_terms_3lf(instance, cum, r, b, lo, hi, l, S_mask, coefs):
    rfac = instance.retailer(r)
    for k in range(lo, hi + 1):
        if S_mask >> k & 1:
            y = _pred_y(instance, r, b, k)
            coefs[y] = coefs.get(y, 0.0) + cum.table[rfac, k, l]
        else:
            x = VarId("x3", b, r, k)
            coefs[x] = coefs.get(x, 0.0) + 1.0


def separate_single_level_3lf(instance: Instance, point: VarValueMap,
                              tol: float = DEFAULT_VIOLATION_TOL) -> list[Cut]:
    cum = cumulative_demand(instance)
    cuts = []
    for r in range(instance.num_retailers):
        rfac = instance.retailer(r)
        for b in range(3):
            for l in range(instance.num_periods):
                rhs = cum.table[rfac, 0, l]
                if rhs <= tol:
                    continue
                total, mask = _inspect_segment_3lf(instance, cum, point, r, b, 0, l, l)
                if rhs - total > tol:
                    cuts.append(make_single_level_3lf_cut(instance, cum, r, b, l, mask))
    return cuts


def make_single_level_3lf_cut(instance, cum, r, b, l, S_mask) -> Cut:
    coefs: dict[VarId, float] = {}
    _mask_terms_3lf(instance, cum, r, b, 0, l, l, S_mask, coefs)
    return Cut("SL_3LF", (r, b, l, S_mask), coefs,
               float(cum.table[instance.retailer(r), 0, l]))


def separate_two_level_3lf(instance: Instance, point: VarValueMap,
                           tol: float = DEFAULT_VIOLATION_TOL) -> list[Cut]:
    cum = cumulative_demand(instance)
    cuts = []
    for r in range(instance.num_retailers):
        rfac = instance.retailer(r)
        for b in range(3):
            for b2 in range(b + 1, 3):
                for l in range(1, instance.num_periods):
                    rhs = cum.table[rfac, 0, l]
                    if rhs <= tol:
                        continue
                    for lb in range(l):
                        t1, m1 = _inspect_segment_3lf(instance, cum, point,
                                                      r, b, 0, lb, l)
                        t2, m2 = _inspect_segment_3lf(instance, cum, point,
                                                      r, b2, lb + 1, l, l)
                        if rhs - t1 - t2 > tol:
                            cuts.append(make_two_level_3lf_cut(
                                instance, cum, r, b, b2, l, lb, m1, m2))
    return cuts


def make_two_level_3lf_cut(instance, cum, r, b, b2, l, lb, m1, m2) -> Cut:
    coefs: dict[VarId, float] = {}
    _mask_terms_3lf(instance, cum, r, b, 0, lb, l, m1, coefs)
    _mask_terms_3lf(instance, cum, r, b2, lb + 1, l, l, m2, coefs)
    return Cut("TL_3LF", (r, b, b2, l, lb, m1, m2), coefs,
               float(cum.table[instance.retailer(r), 0, l]))


def separate_three_level_3lf(instance: Instance, point: VarValueMap,
                             tol: float = DEFAULT_VIOLATION_TOL) -> list[Cut]:
    cum = cumulative_demand(instance)
    cuts = []
    for r in range(instance.num_retailers):
        rfac = instance.retailer(r)
        for l in range(2, instance.num_periods):
            rhs = cum.table[rfac, 0, l]
            if rhs <= tol:
                continue
            for l0 in range(l - 1):
                t0, m0 = _inspect_segment_3lf(instance, cum, point, r, 0, 0, l0, l)
                for l1 in range(l0 + 1, l):
                    t1, m1 = _inspect_segment_3lf(instance, cum, point,
                                                  r, 1, l0 + 1, l1, l)
                    t2, m2 = _inspect_segment_3lf(instance, cum, point,
                                                  r, 2, l1 + 1, l, l)
                    if rhs - t0 - t1 - t2 > tol:
                        cuts.append(make_three_level_3lf_cut(
                            instance, cum, r, l, l0, l1, m0, m1, m2))
    return cuts


def make_three_level_3lf_cut(instance, cum, r, l, l0, l1, m0, m1, m2) -> Cut:
    coefs: dict[VarId, float] = {}
    _mask_terms_3lf(instance, cum, r, 0, 0, l0, l, m0, coefs)
    _mask_terms_3lf(instance, cum, r, 1, l0 + 1, l1, l, m1, coefs)
    _mask_terms_3lf(instance, cum, r, 2, l1 + 1, l, l, m2, coefs)
    return Cut("THL_3LF", (r, l, l0, l1, m0, m1, m2), coefs,
               float(cum.table[instance.retailer(r), 0, l]))


# --------------------------------------------------------------------------
# Cutting-plane driver.

_SINGLE = {"STD": separate_single_level_std, "3LF": separate_single_level_3lf}
_TWO = {"STD": separate_two_level_std, "3LF": separate_two_level_3lf}
_THREE = {"STD": separate_three_level_std, "3LF": separate_three_level_3lf}


def add_cuts_to_model(model: MipModel, cuts: list[Cut]) -> MipModel:
    """New model with the cut pool appended as named >= rows."""
    rows = list(model.constraints)
    for n, cut in enumerate(cuts):
        rows.append(Constraint(f"cut_{cut.family}_{n}", dict(cut.coefs),
                               cut.sense, cut.rhs))
    return MipModel(model.kind, model.variables, model.objective, rows)


@dataclass
class CutLoopResult:
    cuts: list[Cut]
    rounds: int
    objective: Optional[float]
    status: str  # 'ok' or 'lp_unavailable'


LpSource = Callable[[MipModel], Optional[VarValueMap]]


def cutting_plane_loop(instance: Instance, model: MipModel, lp_source: LpSource,
                       config: CutConfig = CutConfig()) -> CutLoopResult:
    """Root cutting-plane rounds over an injected relaxation source.

    Single-level cuts are separated every round, two-level cuts every
    config.two_level_every rounds, three-level cuts every
    config.three_level_every rounds (rounds are 1-based). Stops early
    when a round adds nothing new.
    """
    if model.kind not in _SINGLE:
        raise ValueError(f"cutting planes are defined for STD and 3LF models, "
                         f"not {model.kind}")
    pool: dict[tuple, Cut] = {}
    rounds = 0
    objective = None
    tol = config.violation_tol
    for rnd in range(1, config.max_rounds + 1):
        point = lp_source(add_cuts_to_model(model, list(pool.values())))
        if point is None:
            return CutLoopResult(list(pool.values()), rounds, objective,
                                 "lp_unavailable")
        rounds = rnd
        objective = sum(c * point.get(v, 0.0) for v, c in model.objective.items())
        found = list(_SINGLE[model.kind](instance, point, tol))
        if rnd % config.two_level_every == 0:
            found += _TWO[model.kind](instance, point, tol)
        if rnd % config.three_level_every == 0:
            found += _THREE[model.kind](instance, point, tol)
        added = 0
        for cut in found:
            if cut.key() not in pool:
                pool[cut.key()] = cut
                added += 1
        if added == 0:
            break
    return CutLoopResult(list(pool.values()), rounds, objective, "ok")
