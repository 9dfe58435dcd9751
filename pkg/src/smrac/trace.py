"""Columnar simulation trace and its CSV serialisation."""

import csv
from dataclasses import dataclass, field

import numpy as np

FLOAT_FMT = "%.17g"


@dataclass(eq=False)
class Trace:
    """Per-grid-point log of a run, stored column-wise.

    ``sigma`` and the column suffixes in the CSV use 1-based subsystem ids.
    ``internals`` holds filter and Gramian histories for identity checks;
    it is not serialised.
    """

    t: np.ndarray
    sigma: np.ndarray
    x: np.ndarray
    xm: np.ndarray
    e_norm: np.ndarray
    u: np.ndarray
    V: np.ndarray
    lmin_Q: np.ndarray
    phi_hat: np.ndarray  # (N, M, mn)
    phi_err: np.ndarray  # (N, M)
    s: np.ndarray        # (N, M)
    internals: dict = field(default=None, repr=False)

    def __len__(self):
        return self.t.shape[0]

    @property
    def n(self):
        return self.x.shape[1]

    @property
    def m(self):
        return self.u.shape[1]

    @property
    def M(self):
        return self.phi_hat.shape[1]

    @property
    def e(self):
        return self.x - self.xm

    @property
    def xi_norm(self):
        """Norm of the stacked error ``[e, phi_tilde_1, ..., phi_tilde_M]``."""
        return np.sqrt(self.e_norm**2 + np.sum(self.phi_err**2, axis=1))

    def record(self, k):
        """One row as a plain dict."""
        return {
            "t": float(self.t[k]),
            "sigma": int(self.sigma[k]),
            "x": self.x[k].copy(),
            "xm": self.xm[k].copy(),
            "e": self.e[k],
            "u": self.u[k].copy(),
            "V": float(self.V[k]),
            "lmin_Q": float(self.lmin_Q[k]),
            "phi_hat": self.phi_hat[k].copy(),
            "phi_err": self.phi_err[k].copy(),
            "s": self.s[k].copy(),
            "xi_norm": float(self.xi_norm[k]),
        }

    def decimate(self, every):
        """Keep every ``every``-th row (internals included)."""
        every = int(every)
        if every < 1:
            raise ValueError("decimation factor must be >= 1")
        if every == 1:
            return self
        sl = slice(None, None, every)
        internals = None
        if self.internals is not None:
            internals = {k: v[sl] for k, v in self.internals.items()}
        return Trace(
            self.t[sl], self.sigma[sl], self.x[sl], self.xm[sl], self.e_norm[sl], self.u[sl],
            self.V[sl], self.lmin_Q[sl], self.phi_hat[sl], self.phi_err[sl], self.s[sl], internals,
        )

    def header(self):
        n, m, M, mn = self.n, self.m, self.M, self.phi_hat.shape[2]
        cols = ["t", "sigma"]
        cols += [f"x_{j}" for j in range(1, n + 1)]
        cols += [f"xm_{j}" for j in range(1, n + 1)]
        cols += ["e_norm"]
        cols += [f"u_{j}" for j in range(1, m + 1)]
        cols += ["V", "lmin_Q"]
        for i in range(1, M + 1):
            cols += [f"phihat_{i}_{j}" for j in range(1, mn + 1)]
            cols += [f"phierr_{i}", f"s_{i}"]
        return cols

    def to_table(self):
        N = len(self)
        per_sub = np.concatenate(
            [self.phi_hat, self.phi_err[:, :, None], self.s[:, :, None].astype(float)], axis=2
        ).reshape(N, -1)
        return np.column_stack([
            self.t, self.sigma.astype(float), self.x, self.xm, self.e_norm, self.u,
            self.V, self.lmin_Q, per_sub,
        ])

    def write_csv(self, path):
        header = self.header()
        table = self.to_table()
        mn = self.phi_hat.shape[2]
        int_cols = {1} | {len(header) - 1 - k * (mn + 2) for k in range(self.M)}
        fmt = ["%d" if j in int_cols else FLOAT_FMT for j in range(len(header))]
        np.savetxt(path, table, fmt=fmt, delimiter=",", header=",".join(header), comments="")

    @classmethod
    def read_csv(cls, path):
        with open(path, newline="") as fh:
            header = next(csv.reader(fh))
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls.from_table(header, table)

    @classmethod
    def from_table(cls, header, table):
        n = sum(1 for c in header if c.startswith("x_"))
        m = sum(1 for c in header if c.startswith("u_"))
        M = sum(1 for c in header if c.startswith("s_"))
        mn = m * n
        N = table.shape[0]
        col = 2
        x = table[:, col:col + n]; col += n
        xm = table[:, col:col + n]; col += n
        e_norm = table[:, col]; col += 1
        u = table[:, col:col + m]; col += m
        V = table[:, col]; lmin_Q = table[:, col + 1]; col += 2
        per_sub = table[:, col:].reshape(N, M, mn + 2)
        return cls(
            t=table[:, 0].copy(),
            sigma=table[:, 1].astype(int),
            x=x.copy(), xm=xm.copy(), e_norm=e_norm.copy(), u=u.copy(),
            V=V.copy(), lmin_Q=lmin_Q.copy(),
            phi_hat=per_sub[:, :, :mn].copy(),
            phi_err=per_sub[:, :, mn].copy(),
            s=per_sub[:, :, mn + 1].astype(int),
        )
