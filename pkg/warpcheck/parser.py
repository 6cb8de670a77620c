"""
Scenario loader: YAML files declaring charts, products, space-times, fields
and the checks to run on them.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from configs.config import PATHS, SAMPLING, TOLERANCE
from .errors import (
    DimensionMismatchError,
    ExprError,
    GeometryError,
    SamplingError,
    ScenarioError,
    UnresolvedReferenceError,
)
from .expr import as_expr
from .geometry import Chart, VectorField
from .logger import logger
from .sampling import SamplePlan, merge_boxes
from .spacetime import DoublyWarpedSpacetime, SpacetimeField
from .warped import DoublyWarpedProduct, SplitVectorField

SECTIONS = (
    'name', 'constants', 'sampling', 'charts', 'products', 'spacetimes',
    'fields', 'split_fields', 'spacetime_fields', 'checks',
)


@dataclass
class CheckSpec:
    """One entry of a scenario's ``checks`` list."""
    kind: str
    target: Optional[str] = None
    args: Dict[str, Any] = field(default_factory=dict)
    expect: Any = None
    sampling: Dict[str, Any] = field(default_factory=dict)
    label: Optional[str] = None
    location: str = ''

    @property
    def title(self):
        return self.label or (f"{self.kind}:{self.target}" if self.target else self.kind)


@dataclass
class Scenario:
    name: str
    plan: SamplePlan
    constants: Dict[str, float] = field(default_factory=dict)
    charts: Dict[str, Chart] = field(default_factory=dict)
    products: Dict[str, DoublyWarpedProduct] = field(default_factory=dict)
    spacetimes: Dict[str, DoublyWarpedSpacetime] = field(default_factory=dict)
    fields: Dict[str, VectorField] = field(default_factory=dict)
    split_fields: Dict[str, SplitVectorField] = field(default_factory=dict)
    spacetime_fields: Dict[str, SpacetimeField] = field(default_factory=dict)
    checks: List[CheckSpec] = field(default_factory=list)
    source: Optional[str] = None

    def lookup(self, section, name, location):
        """Resolve ``name`` in one of the declaration sections."""
        table = getattr(self, section)
        if name not in table:
            raise UnresolvedReferenceError(f"unknown {section[:-1].replace('_', ' ')} '{name}'", location)
        return table[name]


def resolve_path(path):
    """A scenario path as given, or looked up in the fixture directory."""
    candidate = Path(path)
    if candidate.is_file():
        return candidate
    fixture_dir = Path(PATHS['fixture_dir'])
    for name in (str(path), f"{path}.yaml", f"{path}.yml"):
        candidate = fixture_dir / name
        if candidate.is_file():
            return candidate
    raise ScenarioError(f"scenario file not found: {path}")


class ScenarioParser:
    """
    Builds a :class:`Scenario` from the YAML mapping of a scenario file.

    Every error carries a location: ``file:line:column`` for YAML syntax
    errors, a key path such as ``charts.sphere.metric[1][1]`` otherwise.
    """

    def __init__(self, source='<scenario>'):
        self.source = source
        self.constants = {}

    def load(self, path):
        """
        Read and validate a scenario file.

        Args:
            path (str): File path, or a name under PATHS['fixture_dir']

        Returns:
            Scenario: The validated scenario
        """
        path = resolve_path(path)
        self.source = str(path)
        logger.info(f"Loading scenario from {path}")
        try:
            with open(path, 'r', encoding='utf-8') as f:
                text = f.read()
        except OSError as e:
            raise ScenarioError(f"cannot read scenario: {e}", self.source)
        return self.loads(text)

    def loads(self, text):
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            mark = getattr(e, 'problem_mark', None)
            location = f"{self.source}:{mark.line + 1}:{mark.column + 1}" if mark else self.source
            problem = getattr(e, 'problem', None) or str(e)
            raise ScenarioError(f"YAML syntax error: {problem}", location)
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ScenarioError("scenario must be a mapping", self.source)
        return self.build(data)

    def build(self, data):
        unknown = set(data) - set(SECTIONS)
        if unknown:
            raise ScenarioError(f"unknown sections: {', '.join(sorted(unknown))}", self.source)
        self.constants = self._constants(data.get('constants') or {})
        scenario = Scenario(
            name=str(data.get('name') or Path(self.source).stem),
            plan=self._plan(data.get('sampling') or {}, 'sampling'),
            constants=self.constants,
            source=self.source,
        )
        for name, spec in self._section(data, 'charts').items():
            scenario.charts[name] = self._chart(name, spec, f"charts.{name}")
        for name, spec in self._section(data, 'products').items():
            scenario.products[name] = self._product(scenario, name, spec, f"products.{name}")
        for name, spec in self._section(data, 'spacetimes').items():
            scenario.spacetimes[name] = self._spacetime(scenario, name, spec, f"spacetimes.{name}")
        for name, spec in self._section(data, 'fields').items():
            scenario.fields[name] = self._field(scenario, spec, f"fields.{name}")
        for name, spec in self._section(data, 'split_fields').items():
            scenario.split_fields[name] = self._split_field(scenario, spec, f"split_fields.{name}")
        for name, spec in self._section(data, 'spacetime_fields').items():
            scenario.spacetime_fields[name] = self._spacetime_field(scenario, spec, f"spacetime_fields.{name}")
        checks = data.get('checks') or []
        if not isinstance(checks, list):
            raise ScenarioError("checks must be a list", self._at('checks'))
        scenario.checks = [self._check(spec, f"checks[{i}]") for i, spec in enumerate(checks)]
        logger.info(
            f"Scenario {scenario.name}: {len(scenario.charts)} charts, {len(scenario.products)} products, "
            f"{len(scenario.spacetimes)} space-times, {len(scenario.checks)} checks"
        )
        return scenario

    # --- helpers -------------------------------------------------------------

    def _at(self, location):
        return f"{self.source}: {location}"

    def _section(self, data, key):
        value = data.get(key) or {}
        if not isinstance(value, dict):
            raise ScenarioError(f"{key} must be a mapping of names to declarations", self._at(key))
        return value

    def _require(self, spec, key, location):
        if not isinstance(spec, dict):
            raise ScenarioError("declaration must be a mapping", self._at(location))
        if key not in spec:
            raise ScenarioError(f"missing key '{key}'", self._at(location))
        return spec[key]

    def _expr(self, value, location):
        try:
            return as_expr(value, self.constants)
        except (ExprError, TypeError) as e:
            raise ScenarioError(str(e), self._at(location))

    def _constants(self, spec):
        constants = {}
        for name, value in spec.items():
            try:
                constants[name] = float(value)
            except (TypeError, ValueError):
                raise ScenarioError(f"constant {name} must be a number", self._at(f"constants.{name}"))
        return constants

    def _plan(self, spec, location):
        try:
            box = merge_boxes({
                name: tuple(interval) for name, interval in (spec.get('box') or {}).items()
            })
            return SamplePlan(
                box=box,
                count=int(spec.get('count', SAMPLING['count'])),
                seed=int(spec.get('seed', SAMPLING['seed'])),
                tol=float(spec.get('tol', TOLERANCE['default'])),
            )
        except (SamplingError, TypeError, ValueError) as e:
            raise ScenarioError(f"invalid sampling: {e}", self._at(location))

    def _components(self, spec, coords, location):
        if not isinstance(spec, dict):
            raise ScenarioError("components must be a mapping", self._at(location))
        stray = set(spec) - set(coords)
        if stray:
            raise DimensionMismatchError(
                f"components {sorted(stray)} are not coordinates {list(coords)}", self._at(location)
            )
        return {name: self._expr(value, f"{location}.{name}") for name, value in spec.items()}

    # --- declarations ----------------------------------------------------------

    def _chart(self, name, spec, location):
        coords = self._require(spec, 'coords', location)
        if not isinstance(coords, list) or not coords:
            raise ScenarioError("coords must be a non-empty list", self._at(f"{location}.coords"))
        n = len(coords)
        if 'diag' in spec:
            diag = spec['diag']
            if not isinstance(diag, list) or len(diag) != n:
                raise DimensionMismatchError(f"diag needs {n} entries", self._at(f"{location}.diag"))
            rows = [
                [self._expr(diag[i], f"{location}.diag[{i}]") if i == j else 0 for j in range(n)]
                for i in range(n)
            ]
        else:
            metric = self._require(spec, 'metric', location)
            if not isinstance(metric, list) or len(metric) != n or any(
                not isinstance(row, list) or len(row) != n for row in metric
            ):
                raise DimensionMismatchError(f"metric must be {n}x{n}", self._at(f"{location}.metric"))
            rows = [
                [self._expr(metric[i][j], f"{location}.metric[{i}][{j}]") for j in range(n)]
                for i in range(n)
            ]
            for i in range(n):
                for j in range(i + 1, n):
                    if rows[i][j] != rows[j][i]:
                        raise ScenarioError("metric is not symmetric", self._at(f"{location}.metric[{j}][{i}]"))
        signature = spec.get('signature')
        if signature is not None and len(signature) != n:
            raise DimensionMismatchError(f"signature needs {n} entries", self._at(f"{location}.signature"))
        try:
            chart = Chart(name, [str(c) for c in coords], rows, signature)
        except GeometryError as e:
            raise ScenarioError(str(e), self._at(location))
        stray = chart.variables() - set(chart.coords)
        if stray:
            raise UnresolvedReferenceError(
                f"metric uses {sorted(stray)}, which are neither coordinates nor constants", self._at(f"{location}.metric")
            )
        return chart

    def _product(self, scenario, name, spec, location):
        m1 = scenario.lookup('charts', self._require(spec, 'm1', location), self._at(f"{location}.m1"))
        m2 = scenario.lookup('charts', self._require(spec, 'm2', location), self._at(f"{location}.m2"))
        f1 = self._expr(spec.get('f1', 1), f"{location}.f1")
        f2 = self._expr(spec.get('f2', 1), f"{location}.f2")
        try:
            product = DoublyWarpedProduct(m1, m2, f1, f2, name=name)
            product.chart
        except ScenarioError as e:
            raise DimensionMismatchError(str(e), self._at(location))
        except GeometryError as e:
            raise ScenarioError(str(e), self._at(location))
        return product

    def _spacetime(self, scenario, name, spec, location):
        base = scenario.lookup('charts', self._require(spec, 'base', location), self._at(f"{location}.base"))
        time = str(spec.get('time', 't'))
        if time in base.coords:
            raise ScenarioError(f"time coordinate {time} collides with {base.name}", self._at(f"{location}.time"))
        interval = spec.get('interval', SAMPLING['default_box'])
        if not isinstance(interval, (list, tuple)) or len(interval) != 2 or not float(interval[0]) < float(interval[1]):
            raise ScenarioError("interval must be [lo, hi] with lo < hi", self._at(f"{location}.interval"))
        f = self._expr(spec.get('f', 1), f"{location}.f")
        sigma = self._expr(spec.get('sigma', 1), f"{location}.sigma")
        try:
            st = DoublyWarpedSpacetime(base, f, sigma, t_interval=interval, time=time, name=name)
            st.chart
        except ScenarioError as e:
            raise DimensionMismatchError(str(e), self._at(location))
        except GeometryError as e:
            raise ScenarioError(str(e), self._at(location))
        return st

    def _field(self, scenario, spec, location):
        chart = scenario.lookup('charts', self._require(spec, 'chart', location), self._at(f"{location}.chart"))
        components = self._components(spec.get('components') or {}, chart.coords, f"{location}.components")
        return VectorField(chart.name, components)

    def _split_field(self, scenario, spec, location):
        w = scenario.lookup('products', self._require(spec, 'product', location), self._at(f"{location}.product"))
        part1 = self._components(spec.get('part1') or {}, w.m1.coords, f"{location}.part1")
        part2 = self._components(spec.get('part2') or {}, w.m2.coords, f"{location}.part2")
        split = SplitVectorField(VectorField(w.m1.name, part1), VectorField(w.m2.name, part2))
        try:
            split.lift(w)
        except DimensionMismatchError as e:
            raise DimensionMismatchError(str(e), self._at(location))
        return split

    def _spacetime_field(self, scenario, spec, location):
        st = scenario.lookup('spacetimes', self._require(spec, 'spacetime', location), self._at(f"{location}.spacetime"))
        h = self._expr(spec.get('h', 0), f"{location}.h")
        spatial = self._components(spec.get('spatial') or {}, st.base.coords, f"{location}.spatial")
        st_field = SpacetimeField(h, VectorField(st.base.name, spatial))
        try:
            st_field.lift(st)
        except DimensionMismatchError as e:
            raise DimensionMismatchError(str(e), self._at(location))
        return st_field

    def _check(self, spec, location):
        kind = self._require(spec, 'kind', location)
        args = spec.get('args') or {}
        if not isinstance(args, dict):
            raise ScenarioError("args must be a mapping", self._at(f"{location}.args"))
        sampling = spec.get('sampling') or {}
        if sampling:
            # validated here, applied by the runner
            self._plan(sampling, f"{location}.sampling")
        expect = spec.get('expect')
        if expect is not None and not isinstance(expect, (str, bool)):
            raise ScenarioError("expect must be a verdict string or a boolean", self._at(f"{location}.expect"))
        return CheckSpec(
            kind=str(kind),
            target=spec.get('target'),
            args=args,
            expect=expect,
            sampling=sampling,
            label=spec.get('label'),
            location=self._at(location),
        )


def load_scenario(path):
    """Parse and validate a scenario file. See :class:`ScenarioParser`."""
    return ScenarioParser().load(path)


def loads_scenario(text, source='<string>'):
    return ScenarioParser(source).loads(text)
