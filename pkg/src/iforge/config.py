"""JSON experiment configuration.

A config is a JSON object::

    {
      "species": "boson",
      "seed": 0,
      "setup": {"device": "fourier", "params": [4, 2]},
      "input": {"kind": "basis", "indices": [1, 2, 2, 2]},
      "sweep": {"name": "gamma", "start": 0.0, "stop": 0.785, "steps": 33},
      "pairs": "bell",
      "output_path": "out.json"
    }

``setup`` is either a device reference or an inline setup document
(``kind``, ``d``, ``N``, ``matrix``/``matrices``, ...). ``input`` kinds:
``basis`` (1-based indices), ``product`` (one complex vector per party),
``tensor`` (``d``, ``N`` and a row-major ``amplitudes`` list) and ``fock``
(``n`` and a list of ``terms`` with ``occupation``). Complex numbers are
``{"re": x, "im": y}`` objects or plain reals. All keys are optional for the
commands that have defaults.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from iforge.errors import ConfigError, IforgeError
from iforge.fock import CoefficientTensor, FockSuperposition, Species
from iforge.scatter import SetupSpec, named_device, setup_from_json

KNOWN_KEYS = {"command", "species", "seed", "setup", "input", "sweep", "pairs", "output_path"}


@dataclass
class Sweep:
    name: str
    start: float
    stop: float
    steps: int


@dataclass
class ExperimentConfig:
    command: str | None = None
    species: Species = Species.BOSON
    seed: int = 0
    setup: SetupSpec | None = None
    input_state: CoefficientTensor | FockSuperposition | None = None
    input_terms: int = 1
    sweep: Sweep | None = None
    pairs: str = "bell"
    output_path: str | None = None


def _complex(value, where: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, dict) and set(value) <= {"re", "im"}:
        try:
            return complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
        except (TypeError, ValueError):
            pass
    raise ConfigError(f"{where}: expected a number or {{\"re\", \"im\"}} object, got {value!r}")


def _int(value, where: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or float(value) != int(value):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{where}: must be at least {minimum}, got {value}")
    return int(value)


def _list(value, where: str) -> list:
    if not isinstance(value, list):
        raise ConfigError(f"{where}: expected a list, got {type(value).__name__}")
    return value


def parse_setup(doc: Any) -> SetupSpec:
    if not isinstance(doc, dict):
        raise ConfigError("setup: expected an object")
    try:
        if "device" in doc:
            return named_device(str(doc["device"]), [float(p) for p in _list(doc.get("params", []), "setup.params")])
        return setup_from_json(doc)
    except ConfigError:
        raise
    except IforgeError as exc:
        raise ConfigError(f"setup: {exc.args[0] if exc.args else exc}") from exc
    except KeyError as exc:
        raise ConfigError(f"setup: missing field {exc}") from exc
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"setup: {exc}") from exc


def parse_input(doc: Any, d: int | None, N: int | None) -> tuple[CoefficientTensor | FockSuperposition, int]:
    """Input state and the number of basis terms in it (an upper bound on its Schmidt rank)."""
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ConfigError("input: expected an object with a 'kind' field")
    kind = doc["kind"]
    try:
        if kind == "basis":
            idx = [_int(i, f"input.indices[{k}]", 1) for k, i in enumerate(_list(doc.get("indices"), "input.indices"))]
            dd = _int(doc.get("d", d), "input.d", 1)
            return CoefficientTensor.basis(dd, idx), 1
        if kind == "product":
            vecs = [
                [_complex(z, f"input.vectors[{k}][{m}]") for m, z in enumerate(_list(v, f"input.vectors[{k}]"))]
                for k, v in enumerate(_list(doc.get("vectors"), "input.vectors"))
            ]
            return CoefficientTensor.product(vecs), 1
        if kind == "tensor":
            dd = _int(doc.get("d", d), "input.d", 1)
            NN = _int(doc.get("N", N), "input.N", 1)
            amps = [_complex(z, f"input.amplitudes[{k}]") for k, z in enumerate(_list(doc.get("amplitudes"), "input.amplitudes"))]
            if len(amps) != dd**NN:
                raise ConfigError(f"input.amplitudes: expected {dd**NN} values, got {len(amps)}")
            t = CoefficientTensor.from_flat(dd, NN, amps)
            return t, max(1, sum(1 for _ in t.nonzero()))
        if kind == "fock":
            terms = []
            for k, term in enumerate(_list(doc.get("terms"), "input.terms")):
                if not isinstance(term, dict) or "occupation" not in term:
                    raise ConfigError(f"input.terms[{k}]: expected an object with 'occupation'")
                occ = tuple(_int(c, f"input.terms[{k}].occupation", 0) for c in _list(term["occupation"], f"input.terms[{k}].occupation"))
                terms.append((occ, _complex(term.get("amplitude", 1.0), f"input.terms[{k}].amplitude")))
            if not terms:
                raise ConfigError("input.terms: empty superposition")
            n = _int(doc.get("n", len(terms[0][0])), "input.n", 1)
            NN = sum(terms[0][0])
            return FockSuperposition.from_terms(n, NN, terms), len(terms)
    except ConfigError:
        raise
    except (IforgeError, ValueError, TypeError) as exc:
        raise ConfigError(f"input: {exc}") from exc
    raise ConfigError(f"input.kind: unknown kind {kind!r}; expected basis, product, tensor or fock")


def parse_config(doc: Any) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be a JSON object")
    unknown = set(doc) - KNOWN_KEYS
    if unknown:
        raise ConfigError(f"config: unknown field(s) {sorted(unknown)}")
    cfg = ExperimentConfig(command=doc.get("command"))
    if "species" in doc:
        try:
            cfg.species = Species.parse(doc["species"])
        except ValueError as exc:
            raise ConfigError(f"species: {exc}") from exc
    if "seed" in doc:
        cfg.seed = _int(doc["seed"], "seed", 0)
    if "setup" in doc:
        cfg.setup = parse_setup(doc["setup"])
    if "input" in doc:
        d = None if cfg.setup is None else cfg.setup.d
        N = None if cfg.setup is None else cfg.setup.N
        cfg.input_state, cfg.input_terms = parse_input(doc["input"], d, N)
    if "sweep" in doc:
        sw = doc["sweep"]
        if not isinstance(sw, dict):
            raise ConfigError("sweep: expected an object")
        try:
            cfg.sweep = Sweep(
                name=str(sw.get("name", "gamma")),
                start=float(sw.get("start", 0.0)),
                stop=float(sw.get("stop", math.pi / 4)),
                steps=_int(sw.get("steps", 33), "sweep.steps", 1),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"sweep: {exc}") from exc
        if cfg.sweep.name != "gamma":
            raise ConfigError(f"sweep.name: only 'gamma' can be swept, got {cfg.sweep.name!r}")
    if "pairs" in doc:
        if doc["pairs"] not in ("bell", "product"):
            raise ConfigError(f"pairs: expected 'bell' or 'product', got {doc['pairs']!r}")
        cfg.pairs = doc["pairs"]
    if "output_path" in doc:
        cfg.output_path = str(doc["output_path"])
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config(doc)


def dump_json(doc: Any) -> str:
    """Deterministic JSON text; floats use the shortest exact round-trip form."""

    def default(o):
        if isinstance(o, np.generic):
            return o.item()
        if isinstance(o, complex):
            return {"re": o.real, "im": o.imag}
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return json.dumps(doc, indent=2, default=default, allow_nan=False) + "\n"
