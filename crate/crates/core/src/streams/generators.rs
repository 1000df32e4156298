//! Synthetic concept generators: Agrawal et al. (1993) loan functions,
//! SEA (Street & Kim, 2001), LED with drifting attributes (Breiman et al.,
//! 1984) and rotating hyperplanes (Hulten et al., 2001).

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Agrawal,
    Sea,
    Led,
    Hyperplane,
}

pub const SEA_THRESHOLDS: [f64; 4] = [8.0, 9.0, 7.0, 9.5];
pub const AGRAWAL_FUNCTIONS: usize = 10;
pub const LED_RELEVANT: usize = 7;
pub const LED_IRRELEVANT: usize = 17;
pub const LED_SEGMENT_NOISE: f64 = 0.1;
pub const HYPERPLANE_DIM: usize = 10;
pub const HYPERPLANE_CONCEPTS: usize = 10;

/// Segments (a..g) lit for each digit.
const LED_DIGITS: [[u8; 7]; 10] = [
    [1, 1, 1, 0, 1, 1, 1],
    [0, 0, 1, 0, 0, 1, 0],
    [1, 0, 1, 1, 1, 0, 1],
    [1, 0, 1, 1, 0, 1, 1],
    [0, 1, 1, 1, 0, 1, 0],
    [1, 1, 0, 1, 0, 1, 1],
    [1, 1, 0, 1, 1, 1, 1],
    [1, 0, 1, 0, 0, 1, 0],
    [1, 1, 1, 1, 1, 1, 1],
    [1, 1, 1, 1, 0, 1, 1],
];

impl GeneratorKind {
    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::Agrawal => "agrawal",
            GeneratorKind::Sea => "sea",
            GeneratorKind::Led => "led",
            GeneratorKind::Hyperplane => "hyperplane",
        }
    }

    pub fn n_concepts(self) -> usize {
        match self {
            GeneratorKind::Agrawal => AGRAWAL_FUNCTIONS,
            GeneratorKind::Sea => SEA_THRESHOLDS.len(),
            GeneratorKind::Led => LED_RELEVANT + 1,
            GeneratorKind::Hyperplane => HYPERPLANE_CONCEPTS,
        }
    }

    pub fn n_classes(self) -> u32 {
        match self {
            GeneratorKind::Led => 10,
            _ => 2,
        }
    }

    pub fn feature_names(self) -> Vec<String> {
        match self {
            GeneratorKind::Agrawal => [
                "salary",
                "commission",
                "age",
                "elevel",
                "car",
                "zipcode",
                "hvalue",
                "hyears",
                "loan",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            GeneratorKind::Sea => (1..=3).map(|i| format!("a{i}")).collect(),
            GeneratorKind::Led => (0..LED_RELEVANT + LED_IRRELEVANT)
                .map(|i| format!("s{i}"))
                .collect(),
            GeneratorKind::Hyperplane => (0..HYPERPLANE_DIM).map(|i| format!("x{i}")).collect(),
        }
    }

    pub fn check_concept(self, concept: usize) -> Result<()> {
        if concept < self.n_concepts() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "{} has concepts 0..{}, got {concept}",
                self.name(),
                self.n_concepts() - 1
            )))
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "agrawal" => Ok(GeneratorKind::Agrawal),
            "sea" => Ok(GeneratorKind::Sea),
            "led" => Ok(GeneratorKind::Led),
            "hyperplane" | "hp" => Ok(GeneratorKind::Hyperplane),
            _ => Err(Error::InvalidParameter(format!("unknown generator `{s}`"))),
        }
    }
}

/// Concept-specific constants that do not depend on the stream seed.
#[derive(Debug, Clone, PartialEq)]
enum ConceptParams {
    Agrawal(usize),
    Sea(f64),
    /// Attribute position -> source attribute.
    Led(Vec<usize>),
    Hyperplane(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Concept {
    kind: GeneratorKind,
    params: ConceptParams,
}

const CONCEPT_SALT: u64 = 0x5EED_C0DE_0000_0000;

impl Concept {
    pub fn new(kind: GeneratorKind, index: usize) -> Result<Self> {
        kind.check_concept(index)?;
        let params = match kind {
            GeneratorKind::Agrawal => ConceptParams::Agrawal(index),
            GeneratorKind::Sea => ConceptParams::Sea(SEA_THRESHOLDS[index]),
            GeneratorKind::Led => {
                let n = LED_RELEVANT + LED_IRRELEVANT;
                let mut map: Vec<usize> = (0..n).collect();
                if index > 0 {
                    let mut rng = ChaCha8Rng::seed_from_u64(CONCEPT_SALT ^ index as u64);
                    let start = rng.gen_range(0..LED_RELEVANT);
                    let offset = rng.gen_range(0..LED_IRRELEVANT);
                    for i in 0..index {
                        let a = (i + start) % LED_RELEVANT;
                        let b = LED_RELEVANT + (i + offset) % LED_IRRELEVANT;
                        map.swap(a, b);
                    }
                }
                ConceptParams::Led(map)
            }
            GeneratorKind::Hyperplane => {
                let mut rng = ChaCha8Rng::seed_from_u64(CONCEPT_SALT ^ 0x4859_5000 ^ index as u64);
                ConceptParams::Hyperplane((0..HYPERPLANE_DIM).map(|_| rng.gen::<f64>()).collect())
            }
        };
        Ok(Concept { kind, params })
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    /// One noise-free instance drawn from this concept.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, u32) {
        match &self.params {
            ConceptParams::Agrawal(f) => {
                let x = agrawal_features(rng);
                let label = agrawal_label(*f, &x);
                (x, label)
            }
            ConceptParams::Sea(theta) => {
                let x: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..10.0)).collect();
                let label = sea_label(*theta, x[0], x[1]);
                (x, label)
            }
            ConceptParams::Led(map) => {
                let digit = rng.gen_range(0..10u32);
                let mut raw = [0.0; LED_RELEVANT + LED_IRRELEVANT];
                for (s, v) in raw.iter_mut().enumerate() {
                    let bit = if s < LED_RELEVANT {
                        let lit = LED_DIGITS[digit as usize][s] == 1;
                        lit ^ rng.gen_bool(LED_SEGMENT_NOISE)
                    } else {
                        rng.gen_bool(0.5)
                    };
                    *v = bit as u8 as f64;
                }
                let x = map.iter().map(|&src| raw[src]).collect();
                (x, digit)
            }
            ConceptParams::Hyperplane(w) => {
                let x: Vec<f64> = (0..HYPERPLANE_DIM).map(|_| rng.gen::<f64>()).collect();
                let s: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
                let half: f64 = w.iter().sum::<f64>() / 2.0;
                (x, (s >= half) as u32)
            }
        }
    }
}

/// SEA rule: class 1 iff `a1 + a2 <= theta`.
pub fn sea_label(theta: f64, a1: f64, a2: f64) -> u32 {
    (a1 + a2 <= theta) as u32
}

fn agrawal_features<R: Rng + ?Sized>(rng: &mut R) -> Vec<f64> {
    let salary = rng.gen_range(20_000.0..150_000.0);
    let commission = if salary >= 75_000.0 {
        0.0
    } else {
        10_000.0 + 75_000.0 * rng.gen::<f64>()
    };
    let age = rng.gen_range(20..=80) as f64;
    let elevel = rng.gen_range(0..=4) as f64;
    let car = rng.gen_range(1..=20) as f64;
    let zipcode = rng.gen_range(0..=8) as f64;
    let hvalue = (9.0 - zipcode) * 100_000.0 * (0.5 + rng.gen::<f64>());
    let hyears = rng.gen_range(1..=30) as f64;
    let loan = rng.gen::<f64>() * 500_000.0;
    vec![
        salary, commission, age, elevel, car, zipcode, hvalue, hyears, loan,
    ]
}

fn within(v: f64, lo: f64, hi: f64) -> bool {
    lo <= v && v <= hi
}

/// Class 0 for group A of Agrawal's function `f` (0-based), 1 otherwise.
pub fn agrawal_label(f: usize, x: &[f64]) -> u32 {
    let (salary, commission, age, elevel, hvalue, hyears, loan) =
        (x[0], x[1], x[2], x[3], x[6], x[7], x[8]);
    let young = age < 40.0;
    let middle = (40.0..60.0).contains(&age);
    let group_a = match f {
        0 => !middle,
        1 => {
            if young {
                within(salary, 50_000.0, 100_000.0)
            } else if middle {
                within(salary, 75_000.0, 125_000.0)
            } else {
                within(salary, 25_000.0, 75_000.0)
            }
        }
        2 => {
            if young {
                elevel <= 1.0
            } else if middle {
                (1.0..=3.0).contains(&elevel)
            } else {
                elevel >= 2.0
            }
        }
        3 => {
            if young {
                if elevel <= 1.0 {
                    within(salary, 25_000.0, 75_000.0)
                } else {
                    within(salary, 50_000.0, 100_000.0)
                }
            } else if middle {
                if (1.0..=3.0).contains(&elevel) {
                    within(salary, 50_000.0, 100_000.0)
                } else {
                    within(salary, 75_000.0, 125_000.0)
                }
            } else if elevel >= 2.0 {
                within(salary, 50_000.0, 100_000.0)
            } else {
                within(salary, 25_000.0, 75_000.0)
            }
        }
        4 => {
            if young {
                within(salary, 50_000.0, 100_000.0) || within(loan, 100_000.0, 300_000.0)
            } else if middle {
                within(salary, 75_000.0, 125_000.0) || within(loan, 200_000.0, 400_000.0)
            } else {
                within(salary, 25_000.0, 75_000.0) || within(loan, 300_000.0, 500_000.0)
            }
        }
        5 => {
            let total = salary + commission;
            if young {
                within(total, 50_000.0, 100_000.0)
            } else if middle {
                within(total, 75_000.0, 125_000.0)
            } else {
                within(total, 25_000.0, 75_000.0)
            }
        }
        6 => 0.67 * (salary + commission) - 0.2 * loan - 20_000.0 > 0.0,
        7 => 0.67 * (salary + commission) - 5_000.0 * elevel - 20_000.0 > 0.0,
        8 => 0.67 * (salary + commission) - 5_000.0 * elevel - 0.2 * loan - 10_000.0 > 0.0,
        _ => {
            let equity = if hyears < 20.0 {
                0.0
            } else {
                0.1 * hvalue * (hyears - 20.0)
            };
            0.67 * (salary + commission) - 5_000.0 * elevel + 0.2 * equity - 10_000.0 > 0.0
        }
    };
    (!group_a) as u32
}

/// Probability that instance `i` follows the new concept:
/// `1 / (1 + exp(-4 (i - p) / w))`, a step at `p` when `w = 0`.
pub fn sigmoid_mix(i: f64, center: f64, width: f64) -> f64 {
    if width <= 0.0 {
        return match i.partial_cmp(&center) {
            Some(core::cmp::Ordering::Less) => 0.0,
            Some(core::cmp::Ordering::Greater) => 1.0,
            _ => 0.5,
        };
    }
    1.0 / (1.0 + libm::exp(-4.0 * (i - center) / width))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptStreamConfig {
    pub generator: GeneratorKind,
    pub concept_a: usize,
    pub concept_b: usize,
    pub drift_center: f64,
    pub drift_width: f64,
    pub label_noise: f64,
    pub train_size: usize,
    pub n_batches: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl ConceptStreamConfig {
    pub fn new(generator: GeneratorKind, concept_a: usize, concept_b: usize, seed: u64) -> Self {
        ConceptStreamConfig {
            generator,
            concept_a,
            concept_b,
            drift_center: 5_000.0,
            drift_width: 1_000.0,
            label_noise: 0.10,
            train_size: 5_000,
            n_batches: 50,
            batch_size: 200,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.check_concept(self.concept_a)?;
        self.generator.check_concept(self.concept_b)?;
        if !(0.0..1.0).contains(&self.label_noise) {
            return Err(Error::InvalidParameter(format!(
                "label noise must lie in [0, 1), got {}",
                self.label_noise
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter(
                "batch size must be at least 1".into(),
            ));
        }
        if self.drift_width.is_nan() || self.drift_width < 0.0 || !self.drift_center.is_finite() {
            return Err(Error::InvalidParameter(
                "drift width must be non-negative and the center finite".into(),
            ));
        }
        Ok(())
    }
}

/// Feature rows with class labels.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabeledData {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<u32>,
}

impl LabeledData {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    fn push(&mut self, x: Vec<f64>, y: u32) {
        self.x.push(x);
        self.y.push(y);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptStream {
    pub feature_names: Vec<String>,
    pub n_classes: u32,
    pub train: LabeledData,
    pub batches: Vec<LabeledData>,
}

fn noisy_label<R: Rng + ?Sized>(rng: &mut R, y: u32, noise: f64, n_classes: u32) -> u32 {
    if noise > 0.0 && rng.gen_bool(noise) {
        // a uniformly chosen different class
        let other = rng.gen_range(0..n_classes - 1);
        if other >= y {
            other + 1
        } else {
            other
        }
    } else {
        y
    }
}

/// Training set from concept A and a batched stream whose instance `i`
/// follows concept B with probability `sigmoid_mix(i, p, w)`.
pub fn gen_concept_stream(config: &ConceptStreamConfig) -> Result<ConceptStream> {
    config.validate()?;
    let kind = config.generator;
    let a = Concept::new(kind, config.concept_a)?;
    let b = Concept::new(kind, config.concept_b)?;
    let n_classes = kind.n_classes();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut train = LabeledData::default();
    for _ in 0..config.train_size {
        let (x, y) = a.sample(&mut rng);
        let y = noisy_label(&mut rng, y, config.label_noise, n_classes);
        train.push(x, y);
    }
    let mut batches = Vec::with_capacity(config.n_batches);
    for bi in 0..config.n_batches {
        let mut batch = LabeledData::default();
        for k in 0..config.batch_size {
            let i = (bi * config.batch_size + k) as f64;
            let p = sigmoid_mix(i, config.drift_center, config.drift_width);
            let concept = if rng.gen::<f64>() < p { &b } else { &a };
            let (x, y) = concept.sample(&mut rng);
            let y = noisy_label(&mut rng, y, config.label_noise, n_classes);
            batch.push(x, y);
        }
        batches.push(batch);
    }
    Ok(ConceptStream {
        feature_names: kind.feature_names(),
        n_classes,
        train,
        batches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sea_rule() {
        assert_eq!(sea_label(8.0, 3.0, 4.0), 1);
        assert_eq!(sea_label(8.0, 5.0, 4.0), 0);
        assert_eq!(sea_label(9.5, 5.0, 4.5), 1);
    }

    #[test]
    fn sigmoid_shape() {
        assert_eq!(sigmoid_mix(5000.0, 5000.0, 1000.0), 0.5);
        assert!(sigmoid_mix(0.0, 5000.0, 1000.0) < 1e-7);
        assert_eq!(sigmoid_mix(4999.0, 5000.0, 0.0), 0.0);
        assert_eq!(sigmoid_mix(5001.0, 5000.0, 0.0), 1.0);
    }

    #[test]
    fn invalid_concepts_are_rejected() {
        assert!(Concept::new(GeneratorKind::Sea, 4).is_err());
        assert!(Concept::new(GeneratorKind::Agrawal, 10).is_err());
        let mut c = ConceptStreamConfig::new(GeneratorKind::Sea, 0, 1, 1);
        c.label_noise = 1.0;
        assert!(gen_concept_stream(&c).is_err());
    }

    #[test]
    fn agrawal_function_zero_is_age_band() {
        let mut x = vec![50_000.0, 0.0, 30.0, 0.0, 1.0, 0.0, 100_000.0, 5.0, 0.0];
        assert_eq!(agrawal_label(0, &x), 0);
        x[2] = 45.0;
        assert_eq!(agrawal_label(0, &x), 1);
        x[2] = 60.0;
        assert_eq!(agrawal_label(0, &x), 0);
    }

    #[test]
    fn agrawal_commission_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let x = agrawal_features(&mut rng);
            assert!(x[0] >= 20_000.0 && x[0] < 150_000.0);
            assert_eq!(x[1] == 0.0, x[0] >= 75_000.0);
            assert!((20.0..=80.0).contains(&x[2]));
        }
    }

    #[test]
    fn led_concept_zero_is_plain_display() {
        let c = Concept::new(GeneratorKind::Led, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut agree = 0;
        for _ in 0..2000 {
            let (x, d) = c.sample(&mut rng);
            agree += (0..7).all(|s| x[s] as u8 == LED_DIGITS[d as usize][s]) as u32;
        }
        // all seven segments survive 10% noise with probability 0.9^7
        let rate = agree as f64 / 2000.0;
        assert!((rate - 0.478).abs() < 0.04, "{rate}");
        let swapped = Concept::new(GeneratorKind::Led, 3).unwrap();
        assert_ne!(swapped.params, c.params);
    }

    #[test]
    fn stream_is_seed_deterministic_and_shaped() {
        let c = ConceptStreamConfig {
            train_size: 100,
            n_batches: 4,
            batch_size: 10,
            ..ConceptStreamConfig::new(GeneratorKind::Agrawal, 0, 2, 9)
        };
        let s = gen_concept_stream(&c).unwrap();
        assert_eq!(s, gen_concept_stream(&c).unwrap());
        assert_eq!(s.train.len(), 100);
        assert_eq!(s.batches.len(), 4);
        assert!(s
            .batches
            .iter()
            .all(|b| b.len() == 10 && b.x.iter().all(|r| r.len() == 9)));
        let other = gen_concept_stream(&ConceptStreamConfig { seed: 10, ..c }).unwrap();
        assert_ne!(s, other);
    }

    #[test]
    fn label_noise_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let flipped = (0..20_000)
            .filter(|_| noisy_label(&mut rng, 1, 0.1, 2) != 1)
            .count();
        assert!((flipped as f64 / 20_000.0 - 0.1).abs() < 0.01);
        assert!((0..1000).all(|_| noisy_label(&mut rng, 3, 0.5, 10) < 10));
    }
}
