"""Experiment configuration files.

Configs are INI files with one flat section per concern::

    [experiment]
    seeds = 0, 1, 2, 3, 4
    total_steps = 10000
    eval_every = 50
    threshold_factor = 1.05
    output = out

    [data]
    n = 10000
    dim = 8
    components = 20
    sigma = 0.025
    path =                      ; optional DVQ1 dataset file

    [model]
    kappa = 50

    [schedule]
    form = inverse              ; constant | inverse | power
    a = 300                     ; default 0.03 * n
    b = 10000                   ; default n
    gamma = 1.0

    [scheme]
    names = averaging, delta, async
    M = 1, 2, 10
    tau = 10

    [delay]
    kind = geometric            ; geometric | constant
    p = 0.5
    c = 1

Every key is optional. Unknown sections or keys are rejected.
"""

import configparser
import io
from dataclasses import dataclass, fields, replace

from .asynchronous import ASYNC, DelayModel
from .core import DEFAULT_STEP_SCALE, StepSchedule
from .sync import SCHEMES

ALL_SCHEMES = SCHEMES + (ASYNC,)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    seeds: tuple = (0,)
    total_steps: int = 10000
    eval_every: int = None
    threshold_factor: float = 1.05
    output: str = "out"
    n: int = 10000
    dim: int = 8
    components: int = 20
    sigma: float = 0.025
    data_path: str = None
    kappa: int = 50
    schedule_form: str = "inverse"
    schedule_a: float = None
    schedule_b: float = None
    schedule_gamma: float = 1.0
    schemes: tuple = ALL_SCHEMES
    M: tuple = (1, 2, 10)
    tau: tuple = (10,)
    delay_kind: str = "geometric"
    delay_p: float = 0.5
    delay_c: int = 1

    def __post_init__(self):
        _validate(self)

    @property
    def schedule(self):
        a = DEFAULT_STEP_SCALE * self.n if self.schedule_a is None else self.schedule_a
        b = float(self.n) if self.schedule_b is None else self.schedule_b
        return StepSchedule(self.schedule_form, a, b, self.schedule_gamma)

    @property
    def delay(self):
        return DelayModel(self.delay_kind, self.delay_p, self.delay_c)

    def with_seed(self, seed):
        return replace(self, seeds=(int(seed),))


# (section, key) -> (field name, parser)
def _ints(text):
    return tuple(int(tok) for tok in _split(text))


def _names(text):
    return tuple(tok.lower() for tok in _split(text))


def _split(text):
    return [tok.strip() for tok in text.replace(";", ",").split(",") if tok.strip()]


def _optional(parse):
    def inner(text):
        return None if text.strip() == "" else parse(text)
    return inner


_KEYS = {
    ("experiment", "seeds"): ("seeds", _ints),
    ("experiment", "total_steps"): ("total_steps", int),
    ("experiment", "eval_every"): ("eval_every", _optional(int)),
    ("experiment", "threshold_factor"): ("threshold_factor", float),
    ("experiment", "output"): ("output", str),
    ("data", "n"): ("n", int),
    ("data", "dim"): ("dim", int),
    ("data", "components"): ("components", int),
    ("data", "sigma"): ("sigma", float),
    ("data", "path"): ("data_path", _optional(str)),
    ("model", "kappa"): ("kappa", int),
    ("schedule", "form"): ("schedule_form", lambda s: s.strip().lower()),
    ("schedule", "a"): ("schedule_a", _optional(float)),
    ("schedule", "b"): ("schedule_b", _optional(float)),
    ("schedule", "gamma"): ("schedule_gamma", float),
    ("scheme", "names"): ("schemes", _names),
    ("scheme", "m"): ("M", _ints),
    ("scheme", "tau"): ("tau", _ints),
    ("delay", "kind"): ("delay_kind", lambda s: s.strip().lower()),
    ("delay", "p"): ("delay_p", float),
    ("delay", "c"): ("delay_c", int),
}
_FIELD_KEYS = {name: key for key, (name, _) in _KEYS.items()}


def _validate(cfg):
    def fail(field_name, message):
        section, key = _FIELD_KEYS[field_name]
        raise ConfigError(f"[{section}] {key}: {message}")

    for name in ("seeds", "M", "tau", "schemes"):
        if not getattr(cfg, name):
            fail(name, "must not be empty")
    if any(m < 1 for m in cfg.M):
        fail("M", "machine counts must be >= 1")
    if any(t < 1 for t in cfg.tau):
        fail("tau", "sync period must be >= 1")
    if any(s < 0 for s in cfg.seeds):
        fail("seeds", "seeds must be non-negative")
    unknown = [s for s in cfg.schemes if s not in ALL_SCHEMES]
    if unknown:
        fail("schemes", f"unknown scheme(s) {', '.join(unknown)}; choose from {', '.join(ALL_SCHEMES)}")
    for name in ("total_steps", "n", "dim", "components", "kappa"):
        if getattr(cfg, name) < 1:
            fail(name, "must be >= 1")
    if cfg.eval_every is not None and cfg.eval_every < 1:
        fail("eval_every", "must be >= 1")
    if not cfg.sigma > 0:
        fail("sigma", "must be positive")
    if not cfg.threshold_factor > 0:
        fail("threshold_factor", "must be positive")
    try:
        cfg.schedule
    except ValueError as exc:
        fail("schedule_form", str(exc))
    try:
        cfg.delay
    except (ValueError, TypeError) as exc:
        fail("delay_kind", str(exc))


def parse_config(text, source="<config>"):
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            lookup = (section.lower(), key.lower())
            if lookup not in _KEYS:
                if section.lower() not in {s for s, _ in _KEYS}:
                    raise ConfigError(f"{source}: unknown section [{section}]")
                raise ConfigError(f"{source}: unknown key [{section}] {key}")
            name, parse = _KEYS[lookup]
            try:
                values[name] = parse(raw)
            except ValueError as exc:
                raise ConfigError(f"{source}: [{section}] {key}: cannot parse {raw!r} ({exc})") from None
    try:
        return ExperimentConfig(**values)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), source=str(path))


def _format(value):
    if value is None:
        return ""
    if isinstance(value, tuple):
        return ", ".join(str(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def dump_config(cfg):
    """Serialize ``cfg`` so that ``parse_config(dump_config(cfg)) == cfg``."""
    parser = configparser.ConfigParser(interpolation=None)
    for f in fields(cfg):
        section, key = _FIELD_KEYS[f.name]
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, _format(getattr(cfg, f.name)))
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def save_config(cfg, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_config(cfg))
