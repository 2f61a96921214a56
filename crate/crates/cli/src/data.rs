use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use retina_limit::{ModelParamSet, PopulationModel};

pub const MODEL_FILE_NAME: &str = "reference_model.json";
pub const POPULATION_FILE_NAME: &str = "reference_population.json";

/// Where reference data comes from: explicit files first, then the data
/// directory, then the embedded copies.
#[derive(Debug, Clone, Default)]
pub struct DataSources {
    pub model_file: Option<PathBuf>,
    pub population_file: Option<PathBuf>,
    pub data_dir: Option<PathBuf>,
}

impl DataSources {
    fn resolve(&self, explicit: &Option<PathBuf>, name: &str) -> Option<PathBuf> {
        explicit
            .clone()
            .or_else(|| self.data_dir.as_ref().map(|d| d.join(name)).filter(|p| p.is_file()))
    }

    pub fn model(&self) -> Result<ModelParamSet> {
        match self.resolve(&self.model_file, MODEL_FILE_NAME) {
            Some(p) => load_model(&p),
            None => Ok(ModelParamSet::reference()),
        }
    }

    pub fn population(&self) -> Result<PopulationModel> {
        let model = self.model()?;
        match self.resolve(&self.population_file, POPULATION_FILE_NAME) {
            Some(p) => PopulationModel::load(&p, model)
                .with_context(|| format!("loading population spread from {}", p.display())),
            None => Ok(PopulationModel::reference().with_model(model)),
        }
    }
}

fn load_model(path: &Path) -> Result<ModelParamSet> {
    ModelParamSet::load(path).with_context(|| format!("loading model parameters from {}", path.display()))
}
