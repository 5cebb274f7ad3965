"""Experiment configuration files (TOML).

Example::

    [[potential.terms]]
    offsets = [[0]]
    coeffs = [{site = 0, l = 1, m = 0, re = 0.5, im = 0.0}]

    [[potential.terms]]
    offsets = [[0], [1]]
    monomials = [{re = 0.25, im = 0.0, factors = [{site = 0, l = 1, m = 0}, {site = 1, l = 1, m = 0}]}]

``coeffs`` entries are single-site harmonics (a sum); ``monomials`` entries are
products of harmonics over the listed sites.  ``site`` indexes ``offsets``.
Observables use the same two forms under ``[observables.<name>]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import hashlib
import re

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .lattice import LatticeObservable, PotentialFamily, Region, Term


class ConfigError(ValueError):
    """Invalid configuration; the message is anchored to a line when possible."""


def _term_lines(text: str, header: str):
    pat = re.compile(r"^\s*\[\[\s*" + re.escape(header) + r"\s*\]\]")
    return [i + 1 for i, line in enumerate(text.splitlines()) if pat.match(line)]


def _observable(spec: dict, offsets, where: str) -> LatticeObservable:
    sites = [tuple(int(c) for c in o) for o in offsets]
    region = Region(sites)
    coeffs = {}

    def site_of(i):
        if not isinstance(i, int) or not 0 <= i < len(sites):
            raise ConfigError(f"{where}: site index {i!r} out of range")
        return sites[i]

    def lm(entry):
        l, m = int(entry["l"]), int(entry["m"])
        if l < 0 or abs(m) > l:
            raise ConfigError(f"{where}: invalid harmonic index (l={l}, m={m})")
        return l, m

    try:
        for c in spec.get("coeffs", []):
            l, m = lm(c)
            k = ((site_of(c["site"]), l, m),)
            coeffs[k] = coeffs.get(k, 0j) + complex(c.get("re", 0.0), c.get("im", 0.0))
        for mono in spec.get("monomials", []):
            fac = []
            for f in mono.get("factors", []):
                l, m = lm(f)
                fac.append((site_of(f["site"]), l, m))
            if len({s for s, _, _ in fac}) != len(fac):
                raise ConfigError(f"{where}: repeated site in a monomial")
            v = complex(mono.get("re", 0.0), mono.get("im", 0.0))
            obs = LatticeObservable.monomial(region, fac, v)
            for k, val in obs.coeffs.items():
                coeffs[k] = coeffs.get(k, 0j) + val
    except KeyError as e:
        raise ConfigError(f"{where}: missing field {e.args[0]!r}") from None
    return LatticeObservable(region, coeffs)


@dataclass
class ExperimentConfig:
    potential: PotentialFamily
    observables: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    raw: bytes = b""

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.raw).hexdigest()

    def get(self, key, default=None):
        return self.params.get(key, default)

    def region(self, default_sites=1) -> Region:
        sites = self.params.get("region")
        if sites is None:
            return Region.path(default_sites)
        return Region([tuple(s) for s in sites])


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{source}: {e}") from None
    lines = _term_lines(text, "potential.terms")
    terms = []
    for i, t in enumerate(data.get("potential", {}).get("terms", [])):
        line = lines[i] if i < len(lines) else 0
        where = f"{source}:{line}: term {i}"
        offsets = t.get("offsets")
        if not offsets:
            raise ConfigError(f"{where}: missing offsets")
        obs = _observable(t, offsets, where)
        if not obs.is_self_adjoint(1e-12):
            raise ConfigError(f"{source}:{line}: self-adjointness violated at term {i}")
        terms.append(Term(Region([tuple(o) for o in offsets]), obs))
    observables = {}
    for name, spec in data.get("observables", {}).items():
        offsets = spec.get("offsets", [[0]])
        observables[name] = _observable(spec, offsets, f"{source}: observable {name}")
    params = dict(data.get("experiment", {}))
    return ExperimentConfig(PotentialFamily(terms), observables, params, text.encode())


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        raw = fh.read()
    cfg = parse_config(raw.decode(), str(path))
    cfg.raw = raw
    return cfg
