//! Regressors and classifiers behind one fit/predict interface.
//!
//! Classification models predict the probability of the positive ("funded")
//! class; hard labels come from [`TrainedModel::predict_labels`].

mod artifact;
mod forest;
mod importance;
mod knn;
mod linear;
mod logit;
mod scaler;
mod svm;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::{Error, Matrix, Result};

pub use artifact::{load_model, read_model, save_model, write_model, ARTIFACT_FORMAT, ARTIFACT_VERSION};
pub use forest::{Forest, ForestParams};
pub use importance::permutation_importance;
pub use knn::{Knn, KnnParams};
pub use linear::{Linear, LinearParams};
pub use logit::{Logit, LogitParams, LogitTrace};
pub use scaler::Scaler;
pub use svm::{Kernel, Svm, SvmParams, SvmReport};
pub use tree::{Criterion, Node, Tree, TreeParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Logit,
    RandomForest,
    Svm,
    Knn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Linear,
        ModelKind::Logit,
        ModelKind::RandomForest,
        ModelKind::Svm,
        ModelKind::Knn,
    ];

    pub fn supports(self, task: Task) -> bool {
        !matches!(
            (self, task),
            (ModelKind::Linear, Task::Classification) | (ModelKind::Logit, Task::Regression)
        )
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Linear => "linear",
            ModelKind::Logit => "logit",
            ModelKind::RandomForest => "rf",
            ModelKind::Svm => "svm",
            ModelKind::Knn => "knn",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(ModelKind::Linear),
            "logit" => Ok(ModelKind::Logit),
            "rf" | "random_forest" | "forest" => Ok(ModelKind::RandomForest),
            "svm" => Ok(ModelKind::Svm),
            "knn" => Ok(ModelKind::Knn),
            other => Err(Error::invalid(format!("unknown model `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    Classification,
}

/// Kind-specific hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hyper {
    Linear(LinearParams),
    Logit(LogitParams),
    RandomForest(ForestParams),
    Svm(SvmParams),
    Knn(KnnParams),
}

impl Hyper {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Linear => Hyper::Linear(LinearParams::default()),
            ModelKind::Logit => Hyper::Logit(LogitParams::default()),
            ModelKind::RandomForest => Hyper::RandomForest(ForestParams::default()),
            ModelKind::Svm => Hyper::Svm(SvmParams::default()),
            ModelKind::Knn => Hyper::Knn(KnnParams::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Hyper::Linear(_) => ModelKind::Linear,
            Hyper::Logit(_) => ModelKind::Logit,
            Hyper::RandomForest(_) => ModelKind::RandomForest,
            Hyper::Svm(_) => ModelKind::Svm,
            Hyper::Knn(_) => ModelKind::Knn,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub task: Task,
    pub hyper: Hyper,
    pub seed: u64,
}

impl ModelSpec {
    /// Default hyperparameters for `kind`.
    pub fn new(kind: ModelKind, task: Task) -> Result<Self> {
        Self::with_hyper(Hyper::default_for(kind), task)
    }

    pub fn with_hyper(hyper: Hyper, task: Task) -> Result<Self> {
        let kind = hyper.kind();
        if !kind.supports(task) {
            return Err(Error::invalid(format!("{kind} does not support {task:?}")));
        }
        Ok(ModelSpec { task, hyper, seed: 0 })
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn kind(&self) -> ModelKind {
        self.hyper.kind()
    }

    pub fn is_classification(&self) -> bool {
        self.task == Task::Classification
    }
}

/// Fitted parameters of each model family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Params {
    Linear(Linear),
    Logit(Logit),
    RandomForest(Forest),
    Svm(Svm),
    Knn(Knn),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub feature_names: Vec<String>,
    pub n_train: usize,
    pub params: Params,
}

/// Fits `spec` on every feature of `train`.
pub fn fit(spec: &ModelSpec, train: &Dataset) -> Result<TrainedModel> {
    if train.is_empty() {
        return Err(Error::Degenerate("empty training set".into()));
    }
    if train.n_features() == 0 {
        return Err(Error::Degenerate("training set has no features".into()));
    }
    if !spec.kind().supports(spec.task) {
        return Err(Error::invalid(format!("{} does not support {:?}", spec.kind(), spec.task)));
    }
    let classification = spec.is_classification();
    if classification {
        if let Some(v) = train.y.iter().find(|v| **v != 0.0 && **v != 1.0) {
            return Err(Error::invalid(format!("classification label {v} is not 0/1")));
        }
        let pos = train.y.iter().filter(|v| **v == 1.0).count();
        if pos == 0 || pos == train.y.len() {
            return Err(Error::Degenerate("classification needs both classes".into()));
        }
    } else if let Some(v) = train.y.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite response {v}")));
    }

    let (x, y) = (&train.x, &train.y);
    let params = match &spec.hyper {
        Hyper::Linear(h) => Params::Linear(Linear::fit(x, y, h)?),
        Hyper::Logit(h) => Params::Logit(Logit::fit(x, y, h)?),
        Hyper::RandomForest(h) => Params::RandomForest(Forest::fit(x, y, classification, h, spec.seed)?),
        Hyper::Svm(h) => Params::Svm(Svm::fit(x, y, classification, h)?),
        Hyper::Knn(h) => Params::Knn(Knn::fit(x, y, classification, h)?),
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        feature_names: train.feature_names.clone(),
        n_train: train.n_rows(),
        params,
    })
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        self.spec.kind()
    }

    pub fn is_classification(&self) -> bool {
        self.spec.is_classification()
    }

    pub fn uses_feature(&self, name: &str) -> bool {
        self.feature_names.iter().any(|f| f == name)
    }

    fn check_width(&self, x: &Matrix) -> Result<()> {
        if x.ncols() != self.feature_names.len() {
            return Err(Error::FeatureMismatch(format!(
                "model expects {} features, got {}",
                self.feature_names.len(),
                x.ncols()
            )));
        }
        Ok(())
    }

    /// Regression values, or probabilities of class 1.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.check_width(x)?;
        Ok(match &self.params {
            Params::Linear(m) => m.predict(x),
            Params::Logit(m) => m.predict_proba(x),
            Params::RandomForest(m) => m.predict(x),
            Params::Svm(m) => m.predict(x),
            Params::Knn(m) => m.predict(x),
        })
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        let x = Matrix::new(1, row.len(), row.to_vec())?;
        Ok(self.predict(&x)?[0])
    }

    /// Predicts on a dataset after checking its columns match the fit-time
    /// features by name and order.
    pub fn predict_dataset(&self, d: &Dataset) -> Result<Vec<f64>> {
        if d.feature_names != self.feature_names {
            return Err(Error::FeatureMismatch(format!(
                "model features [{}] vs dataset features [{}]",
                self.feature_names.join(", "),
                d.feature_names.join(", ")
            )));
        }
        self.predict(&d.x)
    }

    /// Hard 0/1 labels: funded iff p ≥ 0.5. k-NN vote ties (possible only
    /// for even k) go to non-funded.
    pub fn predict_labels(&self, x: &Matrix) -> Result<Vec<f64>> {
        if !self.is_classification() {
            return Err(Error::invalid("labels requested from a regression model"));
        }
        let knn = matches!(self.params, Params::Knn(_));
        Ok(self
            .predict(x)?
            .into_iter()
            .map(|p| f64::from(u8::from(if knn { p > 0.5 } else { p >= 0.5 })))
            .collect())
    }

    /// One non-negative importance per feature.
    pub fn feature_importance(&self, validation: &Dataset) -> Result<Vec<f64>> {
        let imp = match &self.params {
            Params::Linear(m) => m.importance(),
            Params::Logit(m) => m.importance(),
            Params::RandomForest(m) => m.importances.clone(),
            Params::Svm(m) if m.kernel == Kernel::Linear => m.linear_weights().iter().map(|w| w.abs()).collect(),
            Params::Svm(_) | Params::Knn(_) => {
                permutation_importance(self, validation, 5, self.spec.seed)?
            }
        };
        Ok(imp)
    }
}

/// Score on a held-out set: R² for regression, accuracy for classification.
pub fn score(m: &TrainedModel, test: &Dataset) -> Result<f64> {
    if m.is_classification() {
        let labels = m.predict_labels(&test.x)?;
        crate::eval::accuracy(&test.y, &labels)
    } else {
        let yhat = m.predict(&test.x)?;
        crate::eval::r_squared(&test.y, &yhat)
    }
}
