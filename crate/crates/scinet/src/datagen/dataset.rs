//! Dataset container: sample arrays plus metadata, and the SCIDAT1 file
//! format (magic + length-prefixed JSON metadata + little-endian f32 arrays
//! in order observations, questions, answers, ground_truth).

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 7] = b"SCIDAT1";

pub const GENERATOR_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub example: String,
    pub generator_version: String,
    pub seed: u64,
    pub n: usize,
    pub obs_dim: usize,
    pub question_dim: usize,
    pub answer_dim: usize,
    /// Answers per sample; > 1 only for recurrent (time series) examples.
    pub answer_steps: usize,
    pub ground_truth_columns: Vec<String>,
}

/// Homogeneous collection of (observation, question, answer) triples plus
/// hidden ground-truth parameters. Ground truth is for analysis only and is
/// never fed to models.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub observations: Array2<f64>,
    pub questions: Array2<f64>,
    /// `n x (answer_dim * answer_steps)`, steps concatenated in time order.
    pub answers: Array2<f64>,
    pub ground_truth: Array2<f64>,
}

impl Dataset {
    pub fn validate(&self) -> Result<()> {
        let n = self.meta.n;
        let checks = [
            ("observations", self.observations.dim(), (n, self.meta.obs_dim)),
            ("questions", self.questions.dim(), (n, self.meta.question_dim)),
            (
                "answers",
                self.answers.dim(),
                (n, self.meta.answer_dim * self.meta.answer_steps),
            ),
            (
                "ground_truth",
                self.ground_truth.dim(),
                (n, self.meta.ground_truth_columns.len()),
            ),
        ];
        for (name, got, expected) in checks {
            if got != expected {
                return Err(Error::Format(format!(
                    "{name} shape {got:?} inconsistent with metadata {expected:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.meta.n
    }

    pub fn is_empty(&self) -> bool {
        self.meta.n == 0
    }

    /// Split off the first `n_train` samples; the remainder becomes the
    /// second dataset.
    pub fn split(&self, n_train: usize) -> Result<(Dataset, Dataset)> {
        if n_train > self.meta.n {
            return Err(Error::config(format!(
                "cannot take {n_train} training samples from {}",
                self.meta.n
            )));
        }
        let take = |arr: &Array2<f64>, range: std::ops::Range<usize>| {
            arr.slice(ndarray::s![range, ..]).to_owned()
        };
        let mut head_meta = self.meta.clone();
        head_meta.n = n_train;
        let mut tail_meta = self.meta.clone();
        tail_meta.n = self.meta.n - n_train;
        let head = Dataset {
            meta: head_meta,
            observations: take(&self.observations, 0..n_train),
            questions: take(&self.questions, 0..n_train),
            answers: take(&self.answers, 0..n_train),
            ground_truth: take(&self.ground_truth, 0..n_train),
        };
        let tail = Dataset {
            meta: tail_meta,
            observations: take(&self.observations, n_train..self.meta.n),
            questions: take(&self.questions, n_train..self.meta.n),
            answers: take(&self.answers, n_train..self.meta.n),
            ground_truth: take(&self.ground_truth, n_train..self.meta.n),
        };
        Ok((head, tail))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let meta_json = serde_json::to_vec(&self.meta)?;
        let mut bytes = Vec::new();
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&(meta_json.len() as u32).to_le_bytes());
        bytes.extend_from_slice(&meta_json);
        for arr in [
            &self.observations,
            &self.questions,
            &self.answers,
            &self.ground_truth,
        ] {
            for &v in arr.iter() {
                bytes.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        Ok(bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 4 || &bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::Format("bad magic, not a SCIDAT1 file".into()));
        }
        let mut offset = MAGIC.len();
        let meta_len =
            u32::from_le_bytes(bytes[offset..offset + 4].try_into().expect("4 bytes")) as usize;
        offset += 4;
        if bytes.len() < offset + meta_len {
            return Err(Error::Format("truncated metadata".into()));
        }
        let meta: DatasetMeta = serde_json::from_slice(&bytes[offset..offset + meta_len])?;
        offset += meta_len;

        let shapes = [
            (meta.n, meta.obs_dim),
            (meta.n, meta.question_dim),
            (meta.n, meta.answer_dim * meta.answer_steps),
            (meta.n, meta.ground_truth_columns.len()),
        ];
        let total: usize = shapes.iter().map(|(r, c)| r * c).sum();
        let payload = &bytes[offset..];
        if payload.len() != total * 4 {
            return Err(Error::Format(format!(
                "array payload is {} bytes, metadata implies {}",
                payload.len(),
                total * 4
            )));
        }
        let mut cursor = 0;
        let mut read_array = |(rows, cols): (usize, usize)| -> Array2<f64> {
            let mut arr = Array2::zeros((rows, cols));
            for v in arr.iter_mut() {
                let raw =
                    f32::from_le_bytes(payload[cursor..cursor + 4].try_into().expect("4 bytes"));
                *v = raw as f64;
                cursor += 4;
            }
            arr
        };
        let observations = read_array(shapes[0]);
        let questions = read_array(shapes[1]);
        let answers = read_array(shapes[2]);
        let ground_truth = read_array(shapes[3]);
        Ok(Dataset {
            meta,
            observations,
            questions,
            answers,
            ground_truth,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Dataset::from_bytes(&std::fs::read(path)?)
    }
}
