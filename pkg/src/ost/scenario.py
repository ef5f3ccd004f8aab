"""Input data model: user groups, safeguards with leveled plans, weights, budget.

A scenario declares the organization under assessment.  Each user group
carries the asset value reachable from it and its probability of being
attacked; each safeguard carries an ordered ladder of application levels,
where every level states its per-group efficacy, per-group indirect cost
(e.g. working hours lost to training) and a direct monetary cost charged
against the investment budget.

Types are plain frozen dataclasses and enforce nothing on construction;
:func:`validate_scenario` reports every violated invariant as a value so
that callers (and tests) can inspect partial or corrupted data.  Loading
from JSON is strict: unknown keys are rejected and any error-severity
violation aborts the load.
"""

import json
import os
import tempfile
from dataclasses import dataclass, field, replace  # noqa: F401  (replace is part of the public surface for tests)

__all__ = [
    "UserGroup",
    "LevelSpec",
    "SafeguardSpec",
    "Weights",
    "Scenario",
    "Violation",
    "ScenarioError",
    "ScenarioFormatError",
    "ScenarioValidationError",
    "validate_scenario",
    "load_scenario",
    "parse_scenario",
    "scenario_to_dict",
    "dump_scenario",
    "save_scenario",
    "builtin_use_case",
]


class ScenarioError(Exception):
    """Base class for scenario loading and validation failures."""


class ScenarioFormatError(ScenarioError):
    """Malformed scenario file: bad JSON, unknown/missing keys, wrong types."""


class ScenarioValidationError(ScenarioError):
    """Structurally well-formed scenario that violates a domain invariant."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(f"{v.code} at {v.path}" for v in self.violations)
        super().__init__(f"invalid scenario: {lines}")


@dataclass(frozen=True)
class Violation:
    """One violated invariant.

    Attributes:
        code: machine-readable identifier, e.g. ``probability-out-of-range``.
        path: field path such as ``groups[1].attack_probability``.
        message: human-readable explanation.
        severity: ``error`` blocks loading; ``warning`` is advisory.
    """

    code: str
    path: str
    message: str
    severity: str = "error"


@dataclass(frozen=True)
class UserGroup:
    """A class of users with uniform access privileges.

    Attributes:
        id: stable identifier referenced by safeguard level maps.
        name: display string.
        asset_value: value of the assets reachable from this group (>= 0).
        attack_probability: probability this group is targeted, in [0, 1].
        size: head count (>= 1), kept for deriving per-user indirect costs.
    """

    id: str
    name: str
    asset_value: float
    attack_probability: float
    size: int


@dataclass(frozen=True)
class LevelSpec:
    """One application level of a safeguard.

    Attributes:
        level_index: 1-based position in the ladder (level 0, "not applied",
            is implicit everywhere and never stored).
        label: display string, e.g. ``"Low (once per year)"``.
        efficacy_per_group: group id -> fraction of risk mitigated, in [0, 1).
        indirect_cost_per_group: group id -> non-monetary burden (>= 0).
        direct_cost: monetary price of this level (>= 0).
    """

    level_index: int
    label: str
    efficacy_per_group: dict
    indirect_cost_per_group: dict
    direct_cost: float


@dataclass(frozen=True)
class SafeguardSpec:
    """A safeguard with an ordered ladder of application levels."""

    id: str
    name: str
    levels: tuple

    def level(self, index: int) -> LevelSpec:
        for lv in self.levels:
            if lv.level_index == index:
                return lv
        raise KeyError(f"safeguard {self.id!r} has no level {index}")


@dataclass(frozen=True)
class Weights:
    """Importance weights for the two utility terms, each in [0, 1]."""

    loss_weight: float = 1.0
    indirect_cost_weight: float = 1.0


@dataclass(frozen=True)
class Scenario:
    """Full input: groups, safeguards, weights, and the investment budget.

    ``budget`` is ``None`` when the scenario file omits it; commands that
    need one then require it explicitly.
    """

    groups: tuple
    safeguards: tuple
    weights: Weights = field(default_factory=Weights)
    budget: float = None

    def group(self, group_id: str) -> UserGroup:
        for g in self.groups:
            if g.id == group_id:
                return g
        raise KeyError(f"unknown group {group_id!r}")

    def safeguard(self, safeguard_id: str) -> SafeguardSpec:
        for s in self.safeguards:
            if s.id == safeguard_id:
                return s
        raise KeyError(f"unknown safeguard {safeguard_id!r}")

    @property
    def group_ids(self):
        return tuple(g.id for g in self.groups)


def validate_scenario(s: Scenario):
    """Return every violated invariant of ``s`` (empty list when valid).

    Violations are values, not exceptions, so corrupted scenarios can be
    diagnosed field by field.  ``severity == "warning"`` entries do not
    block loading.
    """
    out = []

    if not s.groups:
        out.append(Violation("no-groups", "groups", "at least one user group is required"))
    if not s.safeguards:
        out.append(Violation("no-safeguards", "safeguards", "at least one safeguard is required"))

    seen = set()
    for gi, g in enumerate(s.groups):
        path = f"groups[{gi}]"
        if g.id in seen:
            out.append(Violation("duplicate-group-id", f"{path}.id", f"group id {g.id!r} declared twice"))
        seen.add(g.id)
        if g.asset_value < 0:
            out.append(Violation("negative-asset-value", f"{path}.asset_value",
                                 f"asset value must be >= 0, got {g.asset_value}"))
        if not 0.0 <= g.attack_probability <= 1.0:
            out.append(Violation("probability-out-of-range", f"{path}.attack_probability",
                                 f"attack probability must lie in [0, 1], got {g.attack_probability}"))
        if g.size < 1:
            out.append(Violation("size-out-of-range", f"{path}.size",
                                 f"group size must be >= 1, got {g.size}"))

    group_ids = set(g.id for g in s.groups)

    for w_name, w_val in (("loss_weight", s.weights.loss_weight),
                          ("indirect_cost_weight", s.weights.indirect_cost_weight)):
        if not 0.0 <= w_val <= 1.0:
            out.append(Violation("weight-out-of-range", f"weights.{w_name}",
                                 f"weight must lie in [0, 1], got {w_val}"))

    if s.budget is not None and s.budget < 0:
        out.append(Violation("negative-budget", "budget", f"budget must be >= 0, got {s.budget}"))

    seen = set()
    for si, sg in enumerate(s.safeguards):
        spath = f"safeguards[{si}]"
        if sg.id in seen:
            out.append(Violation("duplicate-safeguard-id", f"{spath}.id",
                                 f"safeguard id {sg.id!r} declared twice"))
        seen.add(sg.id)

        indexes = [lv.level_index for lv in sg.levels]
        if indexes != list(range(1, len(indexes) + 1)):
            out.append(Violation("level-index-gap", f"{spath}.levels",
                                 f"level indexes must run 1..{len(indexes)} without gaps, got {indexes}"))

        for li, lv in enumerate(sg.levels):
            lpath = f"{spath}.levels[{li}]"
            out.extend(_check_group_map(lv.efficacy_per_group, group_ids, f"{lpath}.efficacy"))
            out.extend(_check_group_map(lv.indirect_cost_per_group, group_ids, f"{lpath}.indirect_cost"))
            for gid, e in lv.efficacy_per_group.items():
                if not 0.0 <= e < 1.0:
                    out.append(Violation("efficacy-out-of-range", f"{lpath}.efficacy[{gid}]",
                                         f"efficacy must lie in [0, 1) (a level never removes all risk), got {e}"))
            for gid, c in lv.indirect_cost_per_group.items():
                if c < 0:
                    out.append(Violation("negative-indirect-cost", f"{lpath}.indirect_cost[{gid}]",
                                         f"indirect cost must be >= 0, got {c}"))
            if lv.direct_cost < 0:
                out.append(Violation("negative-direct-cost", f"{lpath}.direct_cost",
                                     f"direct cost must be >= 0, got {lv.direct_cost}"))

        # Indirect cost must not decrease as the application level rises.
        for prev, cur in zip(sg.levels, sg.levels[1:]):
            for gid in sorted(group_ids & set(prev.indirect_cost_per_group) & set(cur.indirect_cost_per_group)):
                if cur.indirect_cost_per_group[gid] < prev.indirect_cost_per_group[gid]:
                    out.append(Violation(
                        "indirect-cost-decreasing",
                        f"safeguards[{si}].levels[{cur.level_index - 1}].indirect_cost[{gid}]",
                        f"indirect cost for group {gid!r} drops from "
                        f"{prev.indirect_cost_per_group[gid]} (level {prev.level_index}) to "
                        f"{cur.indirect_cost_per_group[gid]} (level {cur.level_index}); "
                        "indirect cost must be non-decreasing in the level"))
            if cur.direct_cost < prev.direct_cost:
                out.append(Violation(
                    "direct-cost-decreasing",
                    f"safeguards[{si}].levels[{cur.level_index - 1}].direct_cost",
                    f"direct cost drops from {prev.direct_cost} (level {prev.level_index}) to "
                    f"{cur.direct_cost} (level {cur.level_index})",
                    severity="warning"))

    return out


def _check_group_map(mapping, group_ids, path):
    out = []
    for gid in mapping:
        if gid not in group_ids:
            out.append(Violation("unknown-group-reference", f"{path}[{gid}]",
                                 f"references undeclared group {gid!r}"))
    for gid in sorted(group_ids - set(mapping)):
        out.append(Violation("group-coverage-mismatch", path,
                             f"missing entry for declared group {gid!r}"))
    return out


# --- JSON interchange -------------------------------------------------------

_GROUP_KEYS = {"id", "name", "asset_value", "attack_probability", "size"}
_SAFEGUARD_KEYS = {"id", "name", "levels"}
_LEVEL_KEYS = {"level", "label", "efficacy", "indirect_cost", "per_user_cost", "direct_cost"}
_WEIGHT_KEYS = {"loss_weight", "indirect_cost_weight"}
_TOP_KEYS = {"groups", "safeguards", "weights", "budget"}


def _fail(path, msg):
    raise ScenarioFormatError(f"{path}: {msg}")


def _require(obj, key, path, kind):
    if not isinstance(obj, dict):
        _fail(path, f"expected an object, got {type(obj).__name__}")
    if key not in obj:
        _fail(path, f"missing required key {key!r}")
    val = obj[key]
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            _fail(f"{path}.{key}", f"expected a number, got {type(val).__name__}")
        return float(val)
    if kind is int:
        if isinstance(val, bool) or not isinstance(val, int):
            _fail(f"{path}.{key}", f"expected an integer, got {type(val).__name__}")
        return int(val)
    if kind is str:
        if not isinstance(val, str):
            _fail(f"{path}.{key}", f"expected a string, got {type(val).__name__}")
        return val
    if kind is list:
        if not isinstance(val, list):
            _fail(f"{path}.{key}", f"expected an array, got {type(val).__name__}")
        return val
    if kind is dict:
        if not isinstance(val, dict):
            _fail(f"{path}.{key}", f"expected an object, got {type(val).__name__}")
        return val
    raise AssertionError(kind)


def _check_keys(obj, allowed, path):
    extra = set(obj) - allowed
    if extra:
        _fail(path, f"unknown key(s): {', '.join(sorted(extra))}")


def _number_map(obj, path):
    out = {}
    for k, v in obj.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            _fail(f"{path}[{k}]", f"expected a number, got {type(v).__name__}")
        out[str(k)] = float(v)
    return out


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    """Parse and validate scenario JSON, raising on any error-severity issue."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"{source}: not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        _fail(source, "top level must be an object")
    _check_keys(raw, _TOP_KEYS, source)

    groups = []
    sizes = {}
    for gi, gobj in enumerate(_require(raw, "groups", source, list)):
        gpath = f"groups[{gi}]"
        if not isinstance(gobj, dict):
            _fail(gpath, "expected an object")
        _check_keys(gobj, _GROUP_KEYS, gpath)
        g = UserGroup(
            id=_require(gobj, "id", gpath, str),
            name=_require(gobj, "name", gpath, str),
            asset_value=_require(gobj, "asset_value", gpath, float),
            attack_probability=_require(gobj, "attack_probability", gpath, float),
            size=_require(gobj, "size", gpath, int),
        )
        groups.append(g)
        sizes[g.id] = g.size

    safeguards = []
    for si, sobj in enumerate(_require(raw, "safeguards", source, list)):
        spath = f"safeguards[{si}]"
        if not isinstance(sobj, dict):
            _fail(spath, "expected an object")
        _check_keys(sobj, _SAFEGUARD_KEYS, spath)
        levels = []
        for li, lobj in enumerate(_require(sobj, "levels", spath, list)):
            lpath = f"{spath}.levels[{li}]"
            if not isinstance(lobj, dict):
                _fail(lpath, "expected an object")
            _check_keys(lobj, _LEVEL_KEYS, lpath)
            if "indirect_cost" in lobj and "per_user_cost" in lobj:
                _fail(lpath, "give either 'indirect_cost' or 'per_user_cost', not both")
            if "indirect_cost" in lobj:
                indirect = _number_map(_require(lobj, "indirect_cost", lpath, dict), f"{lpath}.indirect_cost")
            elif "per_user_cost" in lobj:
                per_user = _require(lobj, "per_user_cost", lpath, float)
                indirect = {gid: per_user * size for gid, size in sizes.items()}
            else:
                _fail(lpath, "missing required key 'indirect_cost' (or 'per_user_cost')")
            levels.append(LevelSpec(
                level_index=_require(lobj, "level", lpath, int),
                label=_require(lobj, "label", lpath, str),
                efficacy_per_group=_number_map(_require(lobj, "efficacy", lpath, dict), f"{lpath}.efficacy"),
                indirect_cost_per_group=indirect,
                direct_cost=_require(lobj, "direct_cost", lpath, float),
            ))
        safeguards.append(SafeguardSpec(
            id=_require(sobj, "id", spath, str),
            name=_require(sobj, "name", spath, str),
            levels=tuple(levels),
        ))

    if "weights" in raw:
        wobj = _require(raw, "weights", source, dict)
        _check_keys(wobj, _WEIGHT_KEYS, "weights")
        weights = Weights(
            loss_weight=_require(wobj, "loss_weight", "weights", float),
            indirect_cost_weight=_require(wobj, "indirect_cost_weight", "weights", float),
        )
    else:
        weights = Weights()  # both importance weights default to 1

    budget = _require(raw, "budget", source, float) if "budget" in raw else None

    scenario = Scenario(
        groups=tuple(groups),
        safeguards=tuple(safeguards),
        weights=weights,
        budget=budget,
    )

    errors = [v for v in validate_scenario(scenario) if v.severity == "error"]
    if errors:
        raise ScenarioValidationError(errors)
    return scenario


def load_scenario(path) -> Scenario:
    """Load, parse, and validate a scenario JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_scenario(text, source=str(path))


def scenario_to_dict(s: Scenario) -> dict:
    """Canonical dict form of a scenario (fixed key order, floats normalized)."""
    out = {
        "groups": [
            {
                "id": g.id,
                "name": g.name,
                "asset_value": float(g.asset_value),
                "attack_probability": float(g.attack_probability),
                "size": int(g.size),
            }
            for g in s.groups
        ],
        "safeguards": [
            {
                "id": sg.id,
                "name": sg.name,
                "levels": [
                    {
                        "level": int(lv.level_index),
                        "label": lv.label,
                        "efficacy": {gid: float(lv.efficacy_per_group[gid]) for gid in s.group_ids},
                        "indirect_cost": {gid: float(lv.indirect_cost_per_group[gid]) for gid in s.group_ids},
                        "direct_cost": float(lv.direct_cost),
                    }
                    for lv in sg.levels
                ],
            }
            for sg in s.safeguards
        ],
        "weights": {
            "loss_weight": float(s.weights.loss_weight),
            "indirect_cost_weight": float(s.weights.indirect_cost_weight),
        },
    }
    if s.budget is not None:
        out["budget"] = float(s.budget)
    return out


def dump_scenario(s: Scenario) -> str:
    """Serialize to the canonical JSON text (stable byte-for-byte)."""
    return json.dumps(scenario_to_dict(s), indent=2) + "\n"


def save_scenario(s: Scenario, path) -> None:
    """Write the canonical JSON atomically (write then rename)."""
    text = dump_scenario(s)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".scenario-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def builtin_use_case() -> Scenario:
    """The bundled healthcare awareness-training scenario.

    Three user groups (ICT, clinical, administration; head-count ratio
    1:30:10) and the two CIS control 17 safeguards 17.4 ("Update Awareness
    Content Frequently", leveled by training frequency) and 17.6 ("Train
    Workforce on Identifying Social Engineering Attacks", leveled by
    training medium) with their per-group efficacy and indirect-cost tables.

    The direct costs are documented defaults chosen proportional to the
    indirect-cost ladder of each control; edit the emitted file to study
    alternative pricing.  Both importance weights default to 1.
    """
    groups = (
        UserGroup(id="ict", name="ICT", asset_value=100.0, attack_probability=0.2, size=1),
        UserGroup(id="clinical", name="Clinical", asset_value=50.0, attack_probability=0.5, size=30),
        UserGroup(id="admin", name="Administration", asset_value=25.0, attack_probability=0.8, size=10),
    )
    cis_17_4 = SafeguardSpec(
        id="17.4",
        name="CIS 17.4 Update Awareness Content Frequently",
        levels=(
            LevelSpec(1, "Low (once per year)",
                      {"ict": 0.35, "clinical": 0.3, "admin": 0.3},
                      {"ict": 1.0, "clinical": 30.0, "admin": 10.0}, 10.0),
            LevelSpec(2, "Medium (twice per year)",
                      {"ict": 0.6, "clinical": 0.5, "admin": 0.5},
                      {"ict": 2.0, "clinical": 60.0, "admin": 20.0}, 20.0),
            LevelSpec(3, "High (once per month)",
                      {"ict": 0.8, "clinical": 0.7, "admin": 0.7},
                      {"ict": 12.0, "clinical": 360.0, "admin": 120.0}, 120.0),
        ),
    )
    cis_17_6 = SafeguardSpec(
        id="17.6",
        name="CIS 17.6 Train Workforce on Identifying Social Engineering Attacks",
        levels=(
            LevelSpec(1, "Low (Tests)",
                      {"ict": 0.25, "clinical": 0.2, "admin": 0.2},
                      {"ict": 1.0, "clinical": 30.0, "admin": 10.0}, 10.0),
            LevelSpec(2, "Medium (Videos)",
                      {"ict": 0.7, "clinical": 0.6, "admin": 0.6},
                      {"ict": 2.0, "clinical": 60.0, "admin": 20.0}, 20.0),
            LevelSpec(3, "High (Games)",
                      {"ict": 0.6, "clinical": 0.5, "admin": 0.5},
                      {"ict": 4.0, "clinical": 120.0, "admin": 40.0}, 40.0),
        ),
    )
    return Scenario(
        groups=groups,
        safeguards=(cis_17_4, cis_17_6),
        weights=Weights(loss_weight=1.0, indirect_cost_weight=1.0),
        budget=100.0,
    )
