"""INI experiment configs.

One document holds a ``[global]`` section, one section per command
(``[region]``, ``[ber]``, ``[exit]``, ``[build-code]``) and any number of
``[code:NAME]`` sections that the commands refer to by name::

    [global]
    seed = 7

    [code:sccc]
    kind = sccc
    info_length = 1022
    interleaver_seed = 0

    [ber]
    code = sccc
    n = 2
    rho = 0.95
    gammas = 0.9 0.9; 1.2 1.2

Every error names the offending section/key and, when it exists in the
file, its line number.
"""

from configparser import ConfigParser, Error as ConfigParserError
from dataclasses import asdict, dataclass, field
from functools import lru_cache
import re
from typing import Dict, Optional, Tuple

from .jcd import MAX_EXACT_SOURCES
from .ldpc import IRREGULAR_3, DegreeDistributions, build_code
from .sccc import INNER_GENERATOR, OUTER_GENERATOR, ScccCode
from .conv import RationalGenerator


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CodeSpec:
    name: str
    kind: str  # "sccc" or "ldpc"
    info_length: int = 1022  # sccc
    interleaver_seed: int = 0  # sccc
    outer: str = OUTER_GENERATOR.to_text()
    inner: str = INNER_GENERATOR.to_text()
    length: int = 2048  # ldpc
    degrees: str = "irregular3"  # ldpc: "irregular3" or "regular:dv,dc"
    construction_seed: int = 1  # ldpc

    def summary(self) -> dict:
        """The fields that matter for this kind of code."""
        keys = ("info_length", "interleaver_seed", "outer", "inner") if self.kind == "sccc" else \
            ("length", "degrees", "construction_seed")
        return {"kind": self.kind, **{k: getattr(self, k) for k in keys}}

    def build(self):
        if self.kind == "sccc":
            return ScccCode(self.info_length, self.interleaver_seed, RationalGenerator.from_text(self.outer),
                            RationalGenerator.from_text(self.inner))
        return build_code(degree_distributions(self.degrees), self.length, self.construction_seed)


def degree_distributions(text: str) -> DegreeDistributions:
    if text == "irregular3":
        return IRREGULAR_3
    m = re.fullmatch(r"regular:(\d+),(\d+)", text)
    if not m:
        raise ValueError(f"unknown degree distribution {text!r} (use irregular3 or regular:dv,dc)")
    return DegreeDistributions.regular(int(m.group(1)), int(m.group(2)))


@dataclass(frozen=True)
class RegionConfig:
    n_max: int = 20
    rhos: Tuple[float, ...] = (0.9, 0.95, 0.99)
    r: float = 0.5
    boundary_n: Tuple[int, ...] = (2, 3)
    grid_step: float = 1e-3


@dataclass(frozen=True)
class BerConfig:
    code: str
    n: int = 2
    rho: float = 0.95
    gammas: Tuple[Tuple[float, ...], ...] = ()
    max_blocks: int = 100
    target_errors: int = 100
    external_iters: int = 5
    internal_iters: Optional[int] = None


@dataclass(frozen=True)
class ExitConfig:
    codes: Tuple[str, ...]
    ns: Tuple[int, ...] = (2,)
    rhos: Tuple[float, ...] = (0.95,)
    mc_samples: int = 10**6
    llr_samples: int = 10**4
    tol: float = 0.005
    bracket: Tuple[float, float] = (0.02, 1.0)
    escape: float = 20.0
    unbalanced_snr_in: float = 50.0


@dataclass(frozen=True)
class BuildCodeConfig:
    code: str


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    codes: Dict[str, CodeSpec] = field(default_factory=dict)
    region: Optional[RegionConfig] = None
    ber: Optional[BerConfig] = None
    exit: Optional[ExitConfig] = None
    build_code: Optional[BuildCodeConfig] = None

    def resolved(self, command: str) -> dict:
        """Plain-data view of everything a command uses, for the manifest."""
        section = {"region": self.region, "ber": self.ber, "exit": self.exit, "build-code": self.build_code}[command]
        used = []
        if command in ("ber", "build-code"):
            used = [section.code]
        elif command == "exit":
            used = list(section.codes)
        return {
            "seed": self.seed,
            command: asdict(section),
            "codes": {name: self.codes[name].summary() for name in used},
        }


def _line_numbers(text: str) -> Dict[Tuple[str, str], int]:
    lines, section = {}, None
    for i, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        m = re.fullmatch(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            lines[(section, "")] = i
        elif section and s and s[0] not in "#;" and ("=" in s or ":" in s):
            key = re.split(r"[=:]", s, 1)[0].strip().lower()
            lines.setdefault((section, key), i)
    return lines


class _Reader:
    def __init__(self, parser: ConfigParser, lines, section: str, known: Tuple[str, ...]):
        self.parser, self.lines, self.section = parser, lines, section
        for key in parser[section]:
            if key not in known:
                raise self.error(key, f"unknown key (expected one of: {', '.join(known)})")

    def where(self, key: str) -> str:
        line = self.lines.get((self.section, key)) or self.lines.get((self.section, ""))
        return f"[{self.section}] {key}" + (f" (line {line})" if line else "")

    def error(self, key: str, msg: str) -> ConfigError:
        return ConfigError(f"{self.where(key)}: {msg}")

    def get(self, key, conv, default=None, required=False):
        sec = self.parser[self.section]
        if key not in sec:
            if required:
                raise self.error(key, "missing required key")
            return default
        raw = sec[key].strip()
        try:
            return conv(raw)
        except (ValueError, TypeError) as exc:
            raise self.error(key, f"invalid value {raw!r}: {exc}") from None


def _floats(raw: str) -> Tuple[float, ...]:
    vals = tuple(float(x) for x in re.split(r"[,\s]+", raw) if x)
    if not vals:
        raise ValueError("empty list")
    return vals


def _ints(raw: str) -> Tuple[int, ...]:
    out = []
    for part in (p for p in re.split(r"[,\s]+", raw) if p):
        if "-" in part:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    if not out:
        raise ValueError("empty list")
    return tuple(out)


def _names(raw: str) -> Tuple[str, ...]:
    vals = tuple(x for x in re.split(r"[,\s]+", raw) if x)
    if not vals:
        raise ValueError("empty list")
    return vals


def _grid_points(raw: str) -> Tuple[Tuple[float, ...], ...]:
    return tuple(_floats(p) for p in raw.split(";") if p.strip())


def _check(reader: _Reader, key: str, ok: bool, msg: str):
    if not ok:
        raise reader.error(key, msg)


def _parse_code(parser, lines, section: str) -> CodeSpec:
    name = section.split(":", 1)[1].strip()
    rd = _Reader(parser, lines, section, tuple(f for f in CodeSpec.__dataclass_fields__ if f != "name"))
    kind = rd.get("kind", str, required=True)
    _check(rd, "kind", kind in ("sccc", "ldpc"), f"must be sccc or ldpc, got {kind!r}")
    spec = CodeSpec(
        name=name, kind=kind,
        info_length=rd.get("info_length", int, 1022),
        interleaver_seed=rd.get("interleaver_seed", int, 0),
        outer=rd.get("outer", str, OUTER_GENERATOR.to_text()),
        inner=rd.get("inner", str, INNER_GENERATOR.to_text()),
        length=rd.get("length", int, 2048),
        degrees=rd.get("degrees", str, "irregular3"),
        construction_seed=rd.get("construction_seed", int, 1),
    )
    _check(rd, "info_length", spec.info_length >= 1, "must be >= 1")
    _check(rd, "length", spec.length >= 4, "must be >= 4")
    _check(rd, "interleaver_seed", spec.interleaver_seed >= 0, "must be >= 0")
    _check(rd, "construction_seed", spec.construction_seed >= 0, "must be >= 0")
    for key in ("outer", "inner"):
        try:
            RationalGenerator.from_text(getattr(spec, key))
        except ValueError as exc:
            raise rd.error(key, str(exc)) from None
    try:
        degree_distributions(spec.degrees)
    except ValueError as exc:
        raise rd.error("degrees", str(exc)) from None
    return spec


def _check_rho(rd, key, rhos):
    _check(rd, key, all(0.5 <= p <= 1.0 for p in rhos), "rho must lie in [0.5, 1]")


def parse_config(text: str) -> ExperimentConfig:
    parser = ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except ConfigParserError as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    lines = _line_numbers(text)
    allowed = {"global", "region", "ber", "exit", "build-code"}
    for section in parser.sections():
        if section not in allowed and not section.startswith("code:"):
            line = lines.get((section, ""))
            raise ConfigError(f"[{section}] (line {line}): unknown section")

    seed = 0
    if parser.has_section("global"):
        rd = _Reader(parser, lines, "global", ("seed",))
        seed = rd.get("seed", int, 0)
        _check(rd, "seed", 0 <= seed < 2**64, "must be an unsigned 64-bit integer")

    codes = {s.split(":", 1)[1].strip(): _parse_code(parser, lines, s) for s in parser.sections()
             if s.startswith("code:")}

    def code_ref(rd, key, name):
        _check(rd, key, name in codes, f"no [code:{name}] section")
        return name

    region = ber = exit_ = build = None
    if parser.has_section("region"):
        rd = _Reader(parser, lines, "region", tuple(RegionConfig.__dataclass_fields__))
        region = RegionConfig(
            n_max=rd.get("n_max", int, 20), rhos=rd.get("rhos", _floats, (0.9, 0.95, 0.99)),
            r=rd.get("r", float, 0.5), boundary_n=rd.get("boundary_n", _ints, (2, 3)),
            grid_step=rd.get("grid_step", float, 1e-3),
        )
        _check(rd, "n_max", region.n_max >= 1, "must be >= 1")
        _check_rho(rd, "rhos", region.rhos)
        _check(rd, "r", region.r > 0, "must be positive")
        _check(rd, "boundary_n", all(2 <= n <= region.n_max for n in region.boundary_n),
               "entries must lie in [2, n_max]")
        _check(rd, "grid_step", region.grid_step > 0, "must be positive")

    if parser.has_section("ber"):
        rd = _Reader(parser, lines, "ber", tuple(BerConfig.__dataclass_fields__))
        ber = BerConfig(
            code=code_ref(rd, "code", rd.get("code", str, required=True)),
            n=rd.get("n", int, 2), rho=rd.get("rho", float, 0.95),
            gammas=rd.get("gammas", _grid_points, required=True),
            max_blocks=rd.get("max_blocks", int, 100), target_errors=rd.get("target_errors", int, 100),
            external_iters=rd.get("external_iters", int, 5), internal_iters=rd.get("internal_iters", int, None),
        )
        _check(rd, "n", 2 <= ber.n <= MAX_EXACT_SOURCES,
               f"must lie in [2, {MAX_EXACT_SOURCES}]: the exact connection rule costs 2^(n-1) per bit")
        _check_rho(rd, "rho", (ber.rho,))
        _check(rd, "gammas", len(ber.gammas) > 0 and all(len(g) == ber.n for g in ber.gammas),
               f"each ';'-separated grid point needs {ber.n} link SNRs")
        _check(rd, "gammas", all(x > 0 for g in ber.gammas for x in g), "link SNRs must be positive")
        _check(rd, "max_blocks", ber.max_blocks >= 1, "must be >= 1")
        _check(rd, "target_errors", ber.target_errors >= 1, "must be >= 1")
        _check(rd, "external_iters", ber.external_iters >= 1, "must be >= 1")
        _check(rd, "internal_iters", ber.internal_iters is None or ber.internal_iters >= 1, "must be >= 1")

    if parser.has_section("exit"):
        rd = _Reader(parser, lines, "exit", tuple(ExitConfig.__dataclass_fields__))
        names = rd.get("codes", _names, required=True)
        exit_ = ExitConfig(
            codes=tuple(code_ref(rd, "codes", c) for c in names),
            ns=rd.get("ns", _ints, (2,)), rhos=rd.get("rhos", _floats, (0.95,)),
            mc_samples=rd.get("mc_samples", int, 10**6), llr_samples=rd.get("llr_samples", int, 10**4),
            tol=rd.get("tol", float, 0.005), bracket=rd.get("bracket", _floats, (0.02, 1.0)),
            escape=rd.get("escape", float, 20.0), unbalanced_snr_in=rd.get("unbalanced_snr_in", float, 50.0),
        )
        _check(rd, "ns", all(n >= 2 for n in exit_.ns), "entries must be >= 2")
        _check(rd, "ns", all(n <= MAX_EXACT_SOURCES for n in exit_.ns),
               f"entries must be <= {MAX_EXACT_SOURCES}: the exact connection rule enumerates 2^(n-1) "
               "configurations and the pairwise approximation for many sources is not implemented")
        _check_rho(rd, "rhos", exit_.rhos)
        _check(rd, "mc_samples", exit_.mc_samples >= 10**5, "must be >= 100000")
        _check(rd, "llr_samples", exit_.llr_samples >= 10**4, "must be >= 10000")
        _check(rd, "tol", exit_.tol > 0, "must be positive")
        _check(rd, "bracket", len(exit_.bracket) == 2 and 0 < exit_.bracket[0] < exit_.bracket[1],
               "must be two capacities lo < hi, both positive")
        _check(rd, "escape", 0 < exit_.escape < 25, "must lie in (0, 25): clipped LLRs cap the SNR at 25")

    if parser.has_section("build-code"):
        rd = _Reader(parser, lines, "build-code", ("code",))
        build = BuildCodeConfig(code=code_ref(rd, "code", rd.get("code", str, required=True)))

    return ExperimentConfig(seed=seed, codes=codes, region=region, ber=ber, exit=exit_, build_code=build)


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


@lru_cache(maxsize=16)
def build_from_spec(spec: CodeSpec):
    return spec.build()
