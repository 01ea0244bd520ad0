"""Flat key=value run configuration with dotted section prefixes.

Example::

    # width scan, visibility + WKB methods
    scan.axis = width
    scan.lo = 0.5
    scan.hi = 4.0
    scan.n_points = 8
    scan.methods = vis,wkb
    incident.E = 0.5
    barrier.V0 = 1.0
    barrier.V1 = 0.01
    barrier.omega = 0.1

Values are plain strings until a typed accessor asks for them; '#' starts a
comment, blank lines are ignored.
"""

from dataclasses import dataclass, field

from .errors import ConfigError


@dataclass
class Config:
    values: dict = field(default_factory=dict)
    source: str = "<memory>"

    def get(self, key, default=None):
        return self.values.get(key, default)

    def require(self, key):
        if key not in self.values:
            raise ConfigError(f"missing required config key {key!r} in {self.source}")
        return self.values[key]

    def get_float(self, key, default=None):
        raw = self.values.get(key)
        if raw is None:
            if default is None:
                raise ConfigError(f"missing numeric config key {key!r}")
            return float(default)
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"config key {key!r}: {raw!r} is not a number") from exc

    def get_int(self, key, default=None):
        raw = self.values.get(key)
        if raw is None:
            if default is None:
                raise ConfigError(f"missing integer config key {key!r}")
            return int(default)
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"config key {key!r}: {raw!r} is not an integer") from exc

    def get_list(self, key, default=None):
        raw = self.values.get(key)
        if raw is None:
            return list(default) if default is not None else []
        return [tok.strip() for tok in raw.split(",") if tok.strip()]

    def merged(self, overrides: dict) -> "Config":
        merged = dict(self.values)
        merged.update({k: str(v) for k, v in overrides.items() if v is not None})
        return Config(values=merged, source=self.source)


def parse_config_text(text, source="<memory>") -> Config:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected key = value, got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        values[key] = value.strip()
    return Config(values=values, source=source)


def load_config(path) -> Config:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), source=str(path))
