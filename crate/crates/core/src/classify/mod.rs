//! Method-identification classifier: hand-crafted spectral features plus a
//! from-scratch multinomial logistic regression, producing a 7-class model
//! (six codecs plus "unwatermarked").

pub mod features;
pub mod logreg;

pub use features::{extract_features, feature_names, FEATURE_DIM};
pub use logreg::{
    evaluate, loss_and_gradient, multibit_confusion_gate, train, ClassifierModel, EvalReport,
    TrainConfig, TrainError,
};

use crate::codecs;
use crate::corpus::UNWATERMARKED_LABEL;
use crate::image::RgbImage;

/// Frozen class-list order: registry order, then "unwatermarked".
pub fn class_list() -> Vec<String> {
    let mut classes: Vec<String> =
        codecs::registry().iter().map(|d| d.codec_id.to_string()).collect();
    classes.push(UNWATERMARKED_LABEL.to_string());
    classes
}

impl ClassifierModel {
    /// Feature extraction plus prediction in one step.
    pub fn predict_image(&self, img: &RgbImage) -> Result<(String, Vec<f64>), TrainError> {
        self.predict(&extract_features(img))
    }
}
