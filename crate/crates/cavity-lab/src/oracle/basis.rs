//! Truncated Fock ⊗ Dicke product basis with site-local index maps.

use super::OracleError;

/// Product basis over `M` sites.  Each site carries a photon number
/// `n ∈ 0..=photon_cutoff` and a collective-spin projection index
/// `mi ∈ 0..=N` (projection `m = mi − N/2`); the site-local index is
/// `n (N + 1) + mi` and site 0 is the least-significant digit of the global
/// index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantumBasis {
    sites: usize,
    atoms: usize,
    photon_cutoff: usize,
    site_dim: usize,
    dim: usize,
}

impl QuantumBasis {
    /// Desk-scale bound on the total dimension.
    pub const MAX_DIM: usize = 20_000;

    pub fn new(sites: usize, atoms: usize, photon_cutoff: usize) -> Result<Self, OracleError> {
        assert!(sites >= 1 && atoms >= 1, "basis needs at least one site and one atom");
        let site_dim = (photon_cutoff + 1) * (atoms + 1);
        let mut dim: usize = 1;
        for _ in 0..sites {
            dim = dim.checked_mul(site_dim).unwrap_or(usize::MAX);
            if dim > Self::MAX_DIM {
                return Err(OracleError::DimensionOverflow {
                    dim,
                    max: Self::MAX_DIM,
                });
            }
        }
        Ok(QuantumBasis {
            sites,
            atoms,
            photon_cutoff,
            site_dim,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn photon_cutoff(&self) -> usize {
        self.photon_cutoff
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    fn stride(&self, site: usize) -> usize {
        self.site_dim.pow(site as u32)
    }

    /// Site-local index of `site` within the global index.
    pub fn site_local(&self, global: usize, site: usize) -> usize {
        (global / self.stride(site)) % self.site_dim
    }

    /// Photon number and spin projection index at `site`.
    pub fn site_numbers(&self, global: usize, site: usize) -> (usize, usize) {
        let local = self.site_local(global, site);
        (local / (self.atoms + 1), local % (self.atoms + 1))
    }

    /// Global index with the local state of `site` replaced.
    pub fn replace_site_local(&self, global: usize, site: usize, new_local: usize) -> usize {
        let stride = self.stride(site);
        let old = self.site_local(global, site);
        global - old * stride + new_local * stride
    }

    /// Global index assembled from per-site local indices.
    pub fn encode(&self, locals: &[usize]) -> usize {
        debug_assert_eq!(locals.len(), self.sites);
        locals
            .iter()
            .rev()
            .fold(0, |acc, &local| acc * self.site_dim + local)
    }

    /// Per-site local indices of a global index.
    pub fn decode(&self, mut global: usize) -> Vec<usize> {
        let mut locals = Vec::with_capacity(self.sites);
        for _ in 0..self.sites {
            locals.push(global % self.site_dim);
            global /= self.site_dim;
        }
        locals
    }
}
