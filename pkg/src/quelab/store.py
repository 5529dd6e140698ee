"""Profile store: cache-backed eigenbases, norms and strip masses.

A ProfileStore hands out EigenBasis objects and per-form MassProfile
records, computing them on demand and persisting them in the shared
cache directory when one is configured.  `prefetch` farms whole weights
to a process pool; each worker writes its finished entry atomically and
the parent reloads from disk, so parallel and sequential runs produce
bit-identical values.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor

from mpmath import mp

from . import cache as cachemod
from .eigenforms import EigenBasis, eigen_decompose
from .errors import DomainError
from .massmeasure import (
    DEFAULT_TAIL_LOG,
    MassProfile,
    Sym2Value,
    _quad_required_coeffs,
    ensure_profile_norm,
    vertical_mass,
)
from .qseries import cusp_dim
from .specfun import series_truncation_index

log = logging.getLogger("quelab.store")

_MIN_NCOEFFS = 16


def required_ncoeffs(k: int, t_min) -> int:
    """Coefficient count serving quadrature, strip tails and T >= t_min."""
    d = cusp_dim(k)
    cert = series_truncation_index(k, t_min, DEFAULT_TAIL_LOG)
    return max(cert.n_star, _quad_required_coeffs(k), 2 * (d + 1), _MIN_NCOEFFS)


class ProfileStore:
    def __init__(
        self,
        precision_bits: int = 256,
        cache_dir: str | None = None,
        y_split=2.0,
        quad_tol: float = 1e-8,
        jobs: int = 1,
    ):
        if precision_bits < 128:
            raise DomainError("precision_bits must be at least 128")
        self.precision_bits = precision_bits
        self.cache_dir = cache_dir
        self.y_split = y_split
        self.quad_tol = quad_tol
        self.jobs = max(1, jobs)
        self._bases: dict[int, EigenBasis] = {}
        self._profiles: dict[tuple[int, int], MassProfile] = {}
        self._cached_norms: dict[int, dict] = {}

    # -- eigenbases ---------------------------------------------------

    def basis(self, k: int, ncoeffs: int | None = None, t_min=1.0) -> EigenBasis:
        need = max(ncoeffs or 0, required_ncoeffs(k, t_min))
        have = self._bases.get(k)
        if have is not None and have.forms[0].ncoeffs >= need:
            return have
        loaded = None
        if self.cache_dir:
            loaded = cachemod.load_basis(self.cache_dir, k, self.precision_bits, need)
        if loaded is not None:
            basis, norms = loaded
            self._cached_norms[k] = norms
        else:
            basis = eigen_decompose(k, need, self.precision_bits)
            if self.cache_dir:
                self._persist(basis)
        self._bases[k] = basis
        return basis

    def _persist(self, basis: EigenBasis, norms: dict | None = None) -> None:
        payload = cachemod.basis_payload(basis, norms or {})
        cachemod.cache_put(self.cache_dir, payload)

    # -- profiles -----------------------------------------------------

    def profile(self, k: int, index: int, t_min=1.0) -> MassProfile:
        key = (k, index)
        prof = self._profiles.get(key)
        if prof is None:
            prof = MassProfile(k, index)
            self._profiles[key] = prof
        if prof.log_norm_sq is None:
            basis = self.basis(k, t_min=t_min)
            form = basis.form(index)
            rec = self._cached_norms.get(k, {}).get(self._norm_key(index))
            if rec is not None:
                with mp.workprec(self.precision_bits):
                    lognorm, l_val, resid, n_star = cachemod.norm_from_record(
                        rec, self.precision_bits
                    )
                prof.log_norm_sq = lognorm
                prof.sym2 = Sym2Value(l_val, resid)
                prof.norm_meta = {"n_star": n_star, "from_cache": True}
            else:
                ensure_profile_norm(form, prof, self.y_split, self.quad_tol)
                self._store_norm(k, index, prof)
        return prof

    def _norm_key(self, index: int) -> str:
        return f"{index}|{cachemod.norm_params_key(self.y_split, self.quad_tol)}"

    def _store_norm(self, k: int, index: int, prof: MassProfile) -> None:
        if not self.cache_dir:
            return
        basis = self._bases[k]
        norms = dict(self._cached_norms.get(k, {}))
        norms[self._norm_key(index)] = cachemod.norm_record(
            prof.log_norm_sq,
            prof.sym2.l_value,
            prof.sym2.residue,
            prof.norm_meta.get("n_star", 0),
            self.precision_bits,
        )
        self._cached_norms[k] = norms
        self._persist(basis, norms)

    def form(self, k: int, index: int, t_min=1.0):
        return self.basis(k, t_min=t_min).form(index)

    def i_value(self, k: int, index: int, t):
        prof = self.profile(k, index)
        form = self.form(k, index)
        return vertical_mass(form, t, prof)

    def weights(self, k_min: int, k_max: int):
        return [k for k in range(k_min, k_max + 1) if k % 2 == 0 and cusp_dim(k) > 0]

    # -- parallel prefetch ---------------------------------------------

    def prefetch(self, weights, t_min=1.0) -> None:
        """Populate basis + norm caches for the given weights."""
        missing = []
        for k in weights:
            need = required_ncoeffs(k, t_min)
            if self.cache_dir:
                loaded = cachemod.find_entry(
                    self.cache_dir, k, self.precision_bits, need
                )
                if loaded:
                    payload = None
                    try:
                        payload = cachemod.cache_get(loaded)
                    except Exception:
                        payload = None
                    if payload is not None:
                        norms = payload.get("norms", {})
                        if all(
                            self._norm_key(i) in norms
                            for i in range(1, cusp_dim(k) + 1)
                        ):
                            continue
            missing.append(k)
        if not missing:
            return
        if self.jobs <= 1 or not self.cache_dir or len(missing) == 1:
            for k in missing:
                _build_weight(
                    k,
                    self.precision_bits,
                    self.cache_dir,
                    float(self.y_split),
                    self.quad_tol,
                    float(t_min),
                )
            return
        args = [
            (k, self.precision_bits, self.cache_dir, float(self.y_split), self.quad_tol, float(t_min))
            for k in missing
        ]
        with ProcessPoolExecutor(max_workers=self.jobs) as pool:
            for k in pool.map(_build_weight_star, args):
                log.info("prefetched weight %d", k)


    def prefetch_bases(self, weights, ncoeffs: int) -> None:
        """Populate only eigenbases (no norms) at an explicit ncoeffs."""
        missing = [
            k
            for k in weights
            if not (
                self.cache_dir
                and cachemod.find_entry(self.cache_dir, k, self.precision_bits, ncoeffs)
            )
        ]
        if not missing:
            return
        if self.jobs <= 1 or not self.cache_dir or len(missing) == 1:
            for k in missing:
                self.basis(k, ncoeffs=ncoeffs)
            return
        args = [(k, self.precision_bits, self.cache_dir, ncoeffs) for k in missing]
        with ProcessPoolExecutor(max_workers=self.jobs) as pool:
            for k in pool.map(_build_basis_star, args):
                log.info("prefetched basis %d", k)


def _build_basis_star(args):
    k, prec, cache_dir, ncoeffs = args
    store = ProfileStore(precision_bits=prec, cache_dir=cache_dir, jobs=1)
    store.basis(k, ncoeffs=ncoeffs)
    return k


def _build_weight_star(args):
    return _build_weight(*args)


def _build_weight(k, precision_bits, cache_dir, y_split, quad_tol, t_min):
    """Worker: build one weight's basis and all norms, persist, return k."""
    store = ProfileStore(
        precision_bits=precision_bits,
        cache_dir=cache_dir,
        y_split=y_split,
        quad_tol=quad_tol,
        jobs=1,
    )
    store.basis(k, t_min=t_min)
    for i in range(1, cusp_dim(k) + 1):
        store.profile(k, i, t_min=t_min)
    return k


def default_cache_dir() -> str:
    return os.environ.get("QUELAB_CACHE_DIR", os.path.join(".", ".quelab_cache"))
