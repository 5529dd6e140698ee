"""Persistent eigenform cache with digest-validated atomic entries.

One JSON file per (weight, ncoeffs, precision, schema) key holding the
exact T_2 characteristic polynomial, all normalized coefficients as
round-trip-exact decimal strings, and any Petersson norms computed under
specific (Y, quad_tol) parameters.  Writes go through a temp file and a
single atomic rename, so concurrent sweep processes can share a cache
directory; identical keys always carry identical bytes by determinism.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile

from mpmath import mp

from .eigenforms import EigenBasis, Eigenform
from .errors import CorruptEntry
from .logreal import LogReal
from .numfmt import decimal_to_mpf, mpf_to_decimal, roundtrip_digits

log = logging.getLogger("quelab.cache")

SCHEMA_VERSION = 1


def entry_filename(k: int, ncoeffs: int, precision_bits: int) -> str:
    return f"k{k}_n{ncoeffs}_p{precision_bits}_s{SCHEMA_VERSION}.json"


def _digest(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def norm_params_key(y_split, quad_tol) -> str:
    return f"Y={mpf_to_decimal(mp.mpf(y_split), 17)};tol={quad_tol!r}"


def basis_payload(basis: EigenBasis, norms: dict) -> dict:
    # Digit count follows the read-back precision, which is what makes
    # the decimal round trip exact.
    digits = roundtrip_digits(basis.forms[0].precision_bits)
    forms = []
    for f in basis.forms:
        forms.append(
            {
                "index": f.index,
                "t2_eigenvalue": mpf_to_decimal(f.t2_eigenvalue, digits),
                "lam": [mpf_to_decimal(x, digits) for x in f.lam],
            }
        )
    return {
        "schema_version": SCHEMA_VERSION,
        "key": {
            "k": basis.weight,
            "ncoeffs": basis.forms[0].ncoeffs,
            "precision_bits": basis.forms[0].precision_bits,
        },
        "t2_charpoly": [str(c) for c in basis.t2_charpoly],
        "forms": forms,
        "norms": norms,
    }


def cache_put(cache_dir: str, payload: dict) -> str:
    os.makedirs(cache_dir, exist_ok=True)
    key = payload["key"]
    name = entry_filename(key["k"], key["ncoeffs"], key["precision_bits"])
    path = os.path.join(cache_dir, name)
    wrapped = {"payload": payload, "digest": _digest(payload)}
    fd, tmp = tempfile.mkstemp(dir=cache_dir, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(wrapped, fh, separators=(",", ":"))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def cache_get(path: str) -> dict:
    """Load and validate one entry; raises CorruptEntry on any damage."""
    try:
        with open(path) as fh:
            wrapped = json.load(fh)
        payload = wrapped["payload"]
        if wrapped.get("digest") != _digest(payload):
            raise CorruptEntry(f"digest mismatch in {path}")
        if payload.get("schema_version") != SCHEMA_VERSION:
            raise CorruptEntry(f"schema version mismatch in {path}")
        return payload
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CorruptEntry(f"unreadable cache entry {path}: {exc}") from exc


def find_entry(cache_dir: str, k: int, precision_bits: int, min_ncoeffs: int):
    """Path of any valid entry for (k, prec) holding >= min_ncoeffs."""
    if not cache_dir or not os.path.isdir(cache_dir):
        return None
    prefix = f"k{k}_n"
    suffix = f"_p{precision_bits}_s{SCHEMA_VERSION}.json"
    best = None
    best_n = None
    for name in sorted(os.listdir(cache_dir)):
        if not (name.startswith(prefix) and name.endswith(suffix)):
            continue
        try:
            n = int(name[len(prefix) : -len(suffix)])
        except ValueError:
            continue
        if n >= min_ncoeffs and (best_n is None or n < best_n):
            best, best_n = os.path.join(cache_dir, name), n
    return best


def basis_from_payload(payload: dict) -> EigenBasis:
    key = payload["key"]
    prec = key["precision_bits"]
    forms = []
    with mp.workprec(prec):
        for rec in payload["forms"]:
            lam = tuple(decimal_to_mpf(s, prec) for s in rec["lam"])
            forms.append(
                Eigenform(
                    key["k"],
                    rec["index"],
                    len(lam),
                    lam,
                    prec,
                    decimal_to_mpf(rec["t2_eigenvalue"], prec),
                )
            )
    cp = tuple(int(c) for c in payload["t2_charpoly"])
    return EigenBasis(key["k"], tuple(forms), cp)


def load_basis(cache_dir: str, k: int, precision_bits: int, min_ncoeffs: int):
    """(EigenBasis, norms dict) from cache, or None on miss/corruption."""
    path = find_entry(cache_dir, k, precision_bits, min_ncoeffs)
    if path is None:
        return None
    try:
        payload = cache_get(path)
    except CorruptEntry as exc:
        log.warning("ignoring corrupt cache entry: %s", exc)
        return None
    return basis_from_payload(payload), payload.get("norms", {})


def norm_record(
    log_norm_sq: LogReal, sym2_l, sym2_residue, n_star: int, precision_bits: int
) -> dict:
    digits = roundtrip_digits(precision_bits)
    return {
        "log_norm_sq": mpf_to_decimal(log_norm_sq.logmag, digits),
        "sym2_l": mpf_to_decimal(sym2_l, digits),
        "sym2_residue": mpf_to_decimal(sym2_residue, digits),
        "n_star": n_star,
    }


def norm_from_record(rec: dict, prec: int):
    logmag = decimal_to_mpf(rec["log_norm_sq"], prec)
    return (
        LogReal(1, logmag),
        decimal_to_mpf(rec["sym2_l"], prec),
        decimal_to_mpf(rec["sym2_residue"], prec),
        rec["n_star"],
    )
