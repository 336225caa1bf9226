use core::fmt;
use core::str::FromStr;

/// The 18 radiological finding heads of the pretrained classifier, in
/// canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Task {
    Atelectasis,
    Consolidation,
    Infiltration,
    Pneumothorax,
    Edema,
    Emphysema,
    Fibrosis,
    Effusion,
    Pneumonia,
    PleuralThickening,
    Cardiomegaly,
    Nodule,
    Mass,
    Hernia,
    LungLesion,
    Fracture,
    LungOpacity,
    EnlargedCardiomediastinum,
}

pub const N_TASKS: usize = 18;

impl Task {
    pub const ALL: [Task; N_TASKS] = [
        Task::Atelectasis,
        Task::Consolidation,
        Task::Infiltration,
        Task::Pneumothorax,
        Task::Edema,
        Task::Emphysema,
        Task::Fibrosis,
        Task::Effusion,
        Task::Pneumonia,
        Task::PleuralThickening,
        Task::Cardiomegaly,
        Task::Nodule,
        Task::Mass,
        Task::Hernia,
        Task::LungLesion,
        Task::Fracture,
        Task::LungOpacity,
        Task::EnlargedCardiomediastinum,
    ];

    /// Outputs most related to pneumonia, in the column order used by the
    /// four-output probe and the embedding.
    pub const PNEUMONIA: [Task; 4] = [
        Task::LungOpacity,
        Task::Pneumonia,
        Task::Infiltration,
        Task::Consolidation,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Atelectasis => "atelectasis",
            Task::Consolidation => "consolidation",
            Task::Infiltration => "infiltration",
            Task::Pneumothorax => "pneumothorax",
            Task::Edema => "edema",
            Task::Emphysema => "emphysema",
            Task::Fibrosis => "fibrosis",
            Task::Effusion => "effusion",
            Task::Pneumonia => "pneumonia",
            Task::PleuralThickening => "pleural_thickening",
            Task::Cardiomegaly => "cardiomegaly",
            Task::Nodule => "nodule",
            Task::Mass => "mass",
            Task::Hernia => "hernia",
            Task::LungLesion => "lung_lesion",
            Task::Fracture => "fracture",
            Task::LungOpacity => "lung_opacity",
            Task::EnlargedCardiomediastinum => "enlarged_cardiomediastinum",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownTask;

impl FromStr for Task {
    type Err = UnknownTask;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .iter()
            .copied()
            .find(|t| t.name() == s)
            .ok_or(UnknownTask)
    }
}
