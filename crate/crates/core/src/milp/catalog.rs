//! Index layout of the reformulated association model.
//!
//! Families, in storage order:
//!
//! | family | meaning                          | count          |
//! |--------|----------------------------------|----------------|
//! | `a`    | UE `k` served by AN `m`          | K M            |
//! | `rho`  | AN `m` active                    | M              |
//! | `z`    | `a_im * rho_j`, `j != m`         | K M (M-1)      |
//! | `v`    | `a_im * a_km`                    | K M K          |
//! | `u`    | `z_imj * a_km`                   | K M (M-1) K    |
//! | `w`    | `v_imk * theta`                  | K M K          |
//! | `n`    | `u_imjk * theta`                 | K M (M-1) K    |
//! | `theta`| guaranteed SINR                  | 1              |

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

/// Decoded variable identity. `j` is always an AN index different from `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    Alpha { k: usize, m: usize },
    Rho { m: usize },
    Z { i: usize, m: usize, j: usize },
    V { i: usize, m: usize, k: usize },
    U { i: usize, m: usize, j: usize, k: usize },
    W { i: usize, m: usize, k: usize },
    N { i: usize, m: usize, j: usize, k: usize },
    Theta,
}

impl Var {
    pub fn kind(&self) -> VarKind {
        match self {
            Var::W { .. } | Var::N { .. } | Var::Theta => VarKind::Continuous,
            _ => VarKind::Binary,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Var::Alpha { k, m } => write!(f, "a_{k}_{m}"),
            Var::Rho { m } => write!(f, "rho_{m}"),
            Var::Z { i, m, j } => write!(f, "z_{i}_{m}_{j}"),
            Var::V { i, m, k } => write!(f, "v_{i}_{m}_{k}"),
            Var::U { i, m, j, k } => write!(f, "u_{i}_{m}_{j}_{k}"),
            Var::W { i, m, k } => write!(f, "w_{i}_{m}_{k}"),
            Var::N { i, m, j, k } => write!(f, "n_{i}_{m}_{j}_{k}"),
            Var::Theta => f.write_str("theta"),
        }
    }
}

/// Bijection between model variables and contiguous column indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarCatalog {
    num_ues: usize,
    num_ans: usize,
    alpha: usize,
    rho: usize,
    z: usize,
    v: usize,
    u: usize,
    w: usize,
    n: usize,
    theta: usize,
}

impl VarCatalog {
    pub fn new(num_ues: usize, num_ans: usize) -> Self {
        let (k, m) = (num_ues, num_ans);
        let others = m.saturating_sub(1);
        let alpha = 0;
        let rho = alpha + k * m;
        let z = rho + m;
        let v = z + k * m * others;
        let u = v + k * m * k;
        let w = u + k * m * others * k;
        let n = w + k * m * k;
        let theta = n + k * m * others * k;
        Self {
            num_ues,
            num_ans,
            alpha,
            rho,
            z,
            v,
            u,
            w,
            n,
            theta,
        }
    }

    pub fn num_ues(&self) -> usize {
        self.num_ues
    }

    pub fn num_ans(&self) -> usize {
        self.num_ans
    }

    pub fn len(&self) -> usize {
        self.theta + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Position of `j` within `M \ {m}`.
    #[inline]
    fn slot(&self, m: usize, j: usize) -> usize {
        debug_assert!(j != m && j < self.num_ans && m < self.num_ans);
        if j < m {
            j
        } else {
            j - 1
        }
    }

    #[inline]
    fn unslot(m: usize, s: usize) -> usize {
        if s < m {
            s
        } else {
            s + 1
        }
    }

    #[inline]
    pub fn alpha(&self, k: usize, m: usize) -> usize {
        self.alpha + k * self.num_ans + m
    }

    #[inline]
    pub fn rho(&self, m: usize) -> usize {
        self.rho + m
    }

    #[inline]
    pub fn z(&self, i: usize, m: usize, j: usize) -> usize {
        self.z + (i * self.num_ans + m) * (self.num_ans - 1) + self.slot(m, j)
    }

    #[inline]
    pub fn v(&self, i: usize, m: usize, k: usize) -> usize {
        self.v + (i * self.num_ans + m) * self.num_ues + k
    }

    #[inline]
    pub fn u(&self, i: usize, m: usize, j: usize, k: usize) -> usize {
        self.u + ((i * self.num_ans + m) * (self.num_ans - 1) + self.slot(m, j)) * self.num_ues + k
    }

    #[inline]
    pub fn w(&self, i: usize, m: usize, k: usize) -> usize {
        self.w + (i * self.num_ans + m) * self.num_ues + k
    }

    #[inline]
    pub fn n(&self, i: usize, m: usize, j: usize, k: usize) -> usize {
        self.n + ((i * self.num_ans + m) * (self.num_ans - 1) + self.slot(m, j)) * self.num_ues + k
    }

    #[inline]
    pub fn theta(&self) -> usize {
        self.theta
    }

    /// Number of binary columns (`a`, `rho`, `z`, `v`, `u`).
    pub fn num_binaries(&self) -> usize {
        self.w
    }

    pub fn num_continuous(&self) -> usize {
        self.len() - self.w
    }

    pub fn kind(&self, index: usize) -> VarKind {
        if index < self.w {
            VarKind::Binary
        } else {
            VarKind::Continuous
        }
    }

    pub fn decode(&self, index: usize) -> Var {
        let (k_count, m_count) = (self.num_ues, self.num_ans);
        let others = m_count.saturating_sub(1);
        assert!(index < self.len(), "variable {index} out of range");
        if index >= self.theta {
            return Var::Theta;
        }
        let split3 = |local: usize| {
            let k = local % k_count;
            let im = local / k_count;
            (im / m_count, im % m_count, k)
        };
        let split4 = |local: usize| {
            let k = local % k_count;
            let ims = local / k_count;
            let s = ims % others;
            let im = ims / others;
            let m = im % m_count;
            (im / m_count, m, Self::unslot(m, s), k)
        };
        if index >= self.n {
            let (i, m, j, k) = split4(index - self.n);
            Var::N { i, m, j, k }
        } else if index >= self.w {
            let (i, m, k) = split3(index - self.w);
            Var::W { i, m, k }
        } else if index >= self.u {
            let (i, m, j, k) = split4(index - self.u);
            Var::U { i, m, j, k }
        } else if index >= self.v {
            let (i, m, k) = split3(index - self.v);
            Var::V { i, m, k }
        } else if index >= self.z {
            let local = index - self.z;
            let s = local % others;
            let im = local / others;
            let m = im % m_count;
            Var::Z {
                i: im / m_count,
                m,
                j: Self::unslot(m, s),
            }
        } else if index >= self.rho {
            Var::Rho { m: index - self.rho }
        } else {
            Var::Alpha {
                k: index / m_count,
                m: index % m_count,
            }
        }
    }

    pub fn name(&self, index: usize) -> String {
        self.decode(index).to_string()
    }

    pub fn encode(&self, var: Var) -> usize {
        match var {
            Var::Alpha { k, m } => self.alpha(k, m),
            Var::Rho { m } => self.rho(m),
            Var::Z { i, m, j } => self.z(i, m, j),
            Var::V { i, m, k } => self.v(i, m, k),
            Var::U { i, m, j, k } => self.u(i, m, j, k),
            Var::W { i, m, k } => self.w(i, m, k),
            Var::N { i, m, j, k } => self.n(i, m, j, k),
            Var::Theta => self.theta(),
        }
    }
}
