"""Model bundle persistence.

File layout::

    AUREC-BUNDLE <version>
    sha256 <hex digest of the body>
    <canonical JSON body>

Floats are written with Python's shortest round-trip repr, so a load/save
cycle reproduces every value bit for bit.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import Config
from .errors import BundleError
from .fusion import FusionNet
from .gabor import AppearanceFeatureSpace
from .geo import GeoFeatureSpace, StateBucketing
from .hmm import AuHmm, Gmm
from .reduction import PcaBasis, TwoDPcaBasis
from .rules import RuleList, parse_rules

MAGIC = "AUREC-BUNDLE"
FORMAT_VERSION = 1


@dataclass
class ModelBundle:
    config: Config
    aus: list
    spaces: dict  # key -> GeoFeatureSpace | AppearanceFeatureSpace
    geo_models: list
    app_models: list
    net: FusionNet
    rules: RuleList | None = None
    version: int = FORMAT_VERSION
    extra: dict = field(default_factory=dict)

    def attach_spaces(self):
        for m in self.geo_models + self.app_models:
            m.space = self.spaces[m.space_key]
        return self


def _arr(a):
    a = np.asarray(a)
    if a.dtype == bool:
        return {"shape": list(a.shape), "bool": [bool(v) for v in a.ravel()]}
    return {"shape": list(a.shape), "data": [float(v) for v in a.ravel()]}


def _unarr(d):
    if "bool" in d:
        return np.array(d["bool"], dtype=bool).reshape(d["shape"])
    return np.array(d["data"], dtype=float).reshape(d["shape"])


def _bucketing(b):
    return {"n_states": b.n_states, "boundaries": list(b.boundaries), "upper_closed": list(b.upper_closed)}


def _unbucketing(d):
    return StateBucketing(d["n_states"], tuple(d["boundaries"]), tuple(d["upper_closed"]))


def _pca(b):
    return {"mean": _arr(b.mean), "components": _arr(b.components), "eigenvalues": _arr(b.eigenvalues)}


def _unpca(d):
    return PcaBasis(_unarr(d["mean"]), _unarr(d["components"]), _unarr(d["eigenvalues"]))


def _pca2(b):
    return {"mean_matrix": _arr(b.mean_matrix), "components": _arr(b.components),
            "eigenvalues": _arr(b.eigenvalues)}


def _unpca2(d):
    return TwoDPcaBasis(_unarr(d["mean_matrix"]), _unarr(d["components"]), _unarr(d["eigenvalues"]))


def _space(s):
    if isinstance(s, GeoFeatureSpace):
        return {"kind": "geo", "bucketing": _bucketing(s.bucketing), "bases": [_pca(b) for b in s.bases]}
    return {"kind": "app", "bucketing": _bucketing(s.bucketing),
            "channel_bases": [[_pca2(b) for b in row] for row in s.channel_bases],
            "final_bases": [_pca(b) for b in s.final_bases]}


def _unspace(d):
    if d["kind"] == "geo":
        return GeoFeatureSpace(_unbucketing(d["bucketing"]), [_unpca(b) for b in d["bases"]])
    return AppearanceFeatureSpace(_unbucketing(d["bucketing"]),
                                  [[_unpca2(b) for b in row] for row in d["channel_bases"]],
                                  [_unpca(b) for b in d["final_bases"]])


def _hmm(m):
    return {"au": int(m.au), "bank": m.bank, "n_states": int(m.n_states), "space_key": m.space_key,
            "seed": int(m.seed), "log_trans": _arr(m.log_trans), "log_init": _arr(m.log_init),
            "gmms": [{"weights": _arr(g.weights), "means": _arr(g.means), "variances": _arr(g.variances)}
                     for g in m.gmms]}


def _unhmm(d):
    gmms = [Gmm(_unarr(g["weights"]), _unarr(g["means"]), _unarr(g["variances"])) for g in d["gmms"]]
    return AuHmm(d["au"], d["bank"], d["n_states"], d["space_key"], gmms, _unarr(d["log_trans"]),
                 _unarr(d["log_init"]), d["seed"])


def _net(n):
    return {"w1": _arr(n.w1), "b1": _arr(n.b1), "w2": _arr(n.w2), "b2": _arr(n.b2),
            "in_mean": _arr(n.in_mean), "in_std": _arr(n.in_std), "masked": _arr(n.masked),
            "final_loss": float(n.final_loss), "seed": int(n.seed)}


def _unnet(d):
    return FusionNet(_unarr(d["w1"]), _unarr(d["b1"]), _unarr(d["w2"]), _unarr(d["b2"]),
                     _unarr(d["in_mean"]), _unarr(d["in_std"]), _unarr(d["masked"]),
                     d["final_loss"], d["seed"])


def _rules(r):
    if r is None:
        return None
    return {"text": r.format(), "au_names": list(r.au_names),
            "distributions": [dict(sorted(d.items())) for d in r.distributions]}


def _unrules(d):
    if d is None:
        return None
    rl = parse_rules(d["text"], d["au_names"])
    rl.distributions = [dict(x) for x in d["distributions"]]
    return rl


def bundle_to_dict(b):
    return {
        "config": b.config.to_dict(),
        "aus": [int(a) for a in b.aus],
        "spaces": {k: _space(s) for k, s in sorted(b.spaces.items())},
        "geo_models": [_hmm(m) for m in b.geo_models],
        "app_models": [_hmm(m) for m in b.app_models],
        "net": _net(b.net),
        "rules": _rules(b.rules),
        "extra": b.extra,
    }


def bundle_from_dict(d, version=FORMAT_VERSION):
    b = ModelBundle(Config.from_dict(d["config"]), list(d["aus"]),
                    {k: _unspace(s) for k, s in d["spaces"].items()},
                    [_unhmm(m) for m in d["geo_models"]], [_unhmm(m) for m in d["app_models"]],
                    _unnet(d["net"]), _unrules(d.get("rules")), version, d.get("extra", {}))
    return b.attach_spaces()


def dumps_bundle(b):
    body = json.dumps(bundle_to_dict(b), sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(body.encode()).hexdigest()
    return f"{MAGIC} {b.version}\nsha256 {digest}\n{body}\n"


def loads_bundle(text):
    lines = text.split("\n", 2)
    if len(lines) < 3 or not lines[0].startswith(MAGIC + " "):
        raise BundleError("corrupt bundle: missing header")
    try:
        version = int(lines[0].split()[1])
    except (IndexError, ValueError):
        raise BundleError("corrupt bundle: bad version field") from None
    if version != FORMAT_VERSION:
        raise BundleError(f"unsupported bundle version {version} (this build reads {FORMAT_VERSION})")
    if not lines[1].startswith("sha256 "):
        raise BundleError("corrupt bundle: missing checksum")
    body = lines[2].rstrip("\n")
    if hashlib.sha256(body.encode()).hexdigest() != lines[1].split()[1]:
        raise BundleError("corrupt bundle: checksum mismatch (truncated or edited file)")
    try:
        return bundle_from_dict(json.loads(body), version)
    except (KeyError, TypeError, ValueError) as exc:
        raise BundleError(f"corrupt bundle: {exc}") from None


def save_bundle(b, path):
    Path(path).write_text(dumps_bundle(b), encoding="utf-8")


def load_bundle(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError:
        raise BundleError(f"corrupt bundle: {path} is not text") from None
    except OSError as exc:
        raise BundleError(f"cannot read bundle: {exc}") from None
    return loads_bundle(text)
