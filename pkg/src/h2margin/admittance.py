"""Bus admittance structure.

Builds the sparse nodal admittance matrix together with the per-branch
two-port admittances used for flow evaluation.  Off-nominal taps are folded
in with the usual transformer model (tap on the *from* side):

    Yff = (ys + j*bc/2) / tap**2      Yft = -ys / tap
    Ytf = -ys / tap                   Ytt =  ys + j*bc/2

The matrix is kept in three aligned forms: a SciPy CSR matrix, flat
COO-style arrays consumed by the flow kernels, and the polar magnitude/angle
pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .records import NetworkCase


@dataclass
class AdmittanceMatrix:
    n: int
    csr: sp.csr_matrix  # complex nodal admittance
    rows: np.ndarray  # (nnz,) int64, CSR-ordered row ids
    cols: np.ndarray  # (nnz,) int64, column ids
    diag: np.ndarray  # (n,) int64, position of each diagonal entry
    gdata: np.ndarray  # (nnz,) real parts
    bdata: np.ndarray  # (nnz,) imaginary parts
    y_mag: np.ndarray  # (nnz,) |Y|
    gamma: np.ndarray  # (nnz,) angle(Y), rad
    # branch two-port admittances, aligned with case.branches
    f_idx: np.ndarray  # (L,) from-bus positions
    t_idx: np.ndarray  # (L,) to-bus positions
    yff: np.ndarray
    yft: np.ndarray
    ytf: np.ndarray
    ytt: np.ndarray


def build_admittance(case: NetworkCase) -> AdmittanceMatrix:
    n = case.n_bus
    L = len(case.branches)
    f_idx = case.bus_indices([br.from_bus for br in case.branches])
    t_idx = case.bus_indices([br.to_bus for br in case.branches])
    ys = np.array([br.series_admittance for br in case.branches])
    bc = np.array([br.b_charging for br in case.branches])
    tap = np.array([br.tap for br in case.branches])

    yff = (ys + 0.5j * bc) / tap**2
    yft = -ys / tap
    ytf = -ys / tap
    ytt = ys + 0.5j * bc

    r = np.concatenate([f_idx, f_idx, t_idx, t_idx, np.arange(n)])
    c = np.concatenate([f_idx, t_idx, f_idx, t_idx, np.arange(n)])
    v = np.concatenate([yff, yft, ytf, ytt, np.zeros(n, complex)])
    csr = sp.csr_matrix((v, (r, c)), shape=(n, n))
    csr.sum_duplicates()

    indptr, indices = csr.indptr, csr.indices.astype(np.int64)
    rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
    diag = np.flatnonzero(rows == indices).astype(np.int64)
    if diag.shape[0] != n:
        raise AssertionError("admittance diagonal incomplete")
    data = csr.data
    return AdmittanceMatrix(
        n=n,
        csr=csr,
        rows=rows,
        cols=indices,
        diag=diag,
        gdata=np.ascontiguousarray(data.real),
        bdata=np.ascontiguousarray(data.imag),
        y_mag=np.abs(data),
        gamma=np.angle(data),
        f_idx=f_idx,
        t_idx=t_idx,
        yff=yff,
        yft=yft,
        ytf=ytf,
        ytt=ytt,
    )


__all__ = ["AdmittanceMatrix", "build_admittance"]
