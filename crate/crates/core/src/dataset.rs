//! Collections of sited functions sharing one grid.

use crate::error::{Error, Result};
use crate::fdcore::{srsf_transform, Grid, SampledFunction, Site, SrsfFunction};

/// Named per-site covariates (for example latitude and longitude).
#[derive(Clone, Debug, PartialEq)]
pub struct Covariates {
    pub names: Vec<String>,
    /// One row per site, in dataset order.
    pub rows: Vec<Vec<f64>>,
}

impl Covariates {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.names.iter().position(|n| n == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpatialDataset {
    ids: Vec<String>,
    functions: Vec<SampledFunction>,
    covariates: Option<Covariates>,
    grid: Grid,
    pub meta: Vec<String>,
}

impl SpatialDataset {
    pub fn new(ids: Vec<String>, functions: Vec<SampledFunction>) -> Result<Self> {
        let grid = functions.first().map(|f| f.grid()).unwrap_or_default();
        if ids.len() != functions.len() {
            return Err(Error::Validation(format!(
                "{} site ids for {} functions",
                ids.len(),
                functions.len()
            )));
        }
        if let Some(k) = functions.iter().position(|f| f.grid() != grid) {
            return Err(Error::Validation(format!(
                "function {} is on a different grid",
                ids[k]
            )));
        }
        for i in 0..functions.len() {
            for j in 0..i {
                if ids[i] == ids[j] {
                    return Err(Error::Validation(format!("duplicate site id {}", ids[i])));
                }
                if functions[i].site() == functions[j].site() {
                    return Err(Error::Validation(format!(
                        "sites {} and {} share coordinates",
                        ids[j], ids[i]
                    )));
                }
            }
        }
        Ok(SpatialDataset {
            ids,
            functions,
            covariates: None,
            grid,
            meta: Vec::new(),
        })
    }

    /// Builds a dataset with ids `1..=n`.
    pub fn from_functions(functions: Vec<SampledFunction>) -> Result<Self> {
        let ids = (1..=functions.len()).map(|k| k.to_string()).collect();
        Self::new(ids, functions)
    }

    pub fn with_covariates(mut self, covariates: Covariates) -> Result<Self> {
        if covariates.rows.len() != self.len()
            || covariates
                .rows
                .iter()
                .any(|r| r.len() != covariates.names.len())
        {
            return Err(Error::Validation(
                "covariate table does not match the dataset".into(),
            ));
        }
        self.covariates = Some(covariates);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn functions(&self) -> &[SampledFunction] {
        &self.functions
    }

    pub fn covariates(&self) -> Option<&Covariates> {
        self.covariates.as_ref()
    }

    pub fn sites(&self) -> Vec<Site> {
        self.functions.iter().map(|f| f.site()).collect()
    }

    pub fn srsfs(&self) -> Result<Vec<SrsfFunction>> {
        self.functions.iter().map(srsf_transform).collect()
    }

    /// Same sites and ids with replaced function values.
    pub fn with_functions(&self, functions: Vec<SampledFunction>) -> Result<Self> {
        let mut out = SpatialDataset::new(self.ids.clone(), functions)?;
        out.covariates = self.covariates.clone();
        out.meta = self.meta.clone();
        Ok(out)
    }

    /// The dataset restricted to `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let ids = indices.iter().map(|&k| self.ids[k].clone()).collect();
        let functions = indices.iter().map(|&k| self.functions[k].clone()).collect();
        let mut out = SpatialDataset::new(ids, functions)?;
        if let Some(c) = &self.covariates {
            out.covariates = Some(Covariates {
                names: c.names.clone(),
                rows: indices.iter().map(|&k| c.rows[k].clone()).collect(),
            });
        }
        out.meta = self.meta.clone();
        Ok(out)
    }

    /// Every site except `skip`.
    pub fn without(&self, skip: usize) -> Result<Self> {
        let keep: Vec<usize> = (0..self.len()).filter(|&k| k != skip).collect();
        self.subset(&keep)
    }
}
