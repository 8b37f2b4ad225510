//! Embedded datasets and their posets.
//!
//! - `selenium`: 3 supplement types x 4 concentrations; types I and II are
//!   both below III, concentrations form a chain.
//! - `cchs`: percentage of survey respondents reporting fair or poor mental
//!   health, indexed `[age group][year][gender]` (5 x 7 x 2).
//! - `collider`: a 3 x 3 matrix over two three-element collider orders that
//!   needs four terms.

use crate::error::{NdError, Result};
use crate::io::parse_poset;
use crate::poset::Poset;
use crate::tensor::Tensor;

pub const SELENIUM: [[f64; 4]; 3] = [
    [2.0, 27.4, 26.7, 68.0],
    [1.4, 19.6, 41.5, 40.3],
    [2.9, 24.4, 75.0, 96.5],
];

/// Female respondents, rows = age groups, columns = years 2016..2022.
pub const CCHS_FEMALE: [[f64; 7]; 5] = [
    [6.0, 7.8, 8.5, 8.4, 12.9, 16.5, 21.0],
    [9.0, 10.1, 12.1, 13.1, 15.3, 17.8, 24.2],
    [7.6, 7.9, 8.4, 8.2, 10.8, 14.6, 16.4],
    [8.3, 8.1, 7.9, 7.5, 9.3, 11.6, 14.0],
    [5.7, 4.7, 5.4, 5.5, 6.0, 6.8, 9.2],
];

/// Male respondents, same layout as [`CCHS_FEMALE`].
pub const CCHS_MALE: [[f64; 7]; 5] = [
    [2.9, 3.9, 5.0, 3.8, 3.8, 7.5, 8.7],
    [6.7, 6.6, 7.6, 10.6, 11.2, 13.6, 16.1],
    [5.2, 6.2, 6.8, 7.3, 9.9, 11.6, 13.5],
    [7.3, 6.4, 7.6, 6.8, 8.7, 9.0, 11.7],
    [6.3, 6.0, 4.5, 4.9, 4.9, 6.7, 7.9],
];

/// `V_1 V_2^T` for two three-element collider orders, i.e. the sum of the
/// outer products of all four connected-upset indicators with themselves.
pub const COLLIDER_MATRIX: [[f64; 3]; 3] = [[2.0, 1.0, 2.0], [1.0, 2.0, 2.0], [2.0, 2.0, 4.0]];

pub const SELENIUM_TYPE_POSET: &str = include_str!("../fixtures/selenium_type.poset");
pub const SELENIUM_CONCENTRATION_POSET: &str =
    include_str!("../fixtures/selenium_concentration.poset");
pub const CCHS_AGE_POSET: &str = include_str!("../fixtures/cchs_age.poset");
pub const CCHS_YEAR_POSET: &str = include_str!("../fixtures/cchs_year.poset");
pub const CCHS_GENDER_POSET: &str = include_str!("../fixtures/cchs_gender.poset");
pub const COLLIDER_POSET: &str = include_str!("../fixtures/collider.poset");

/// Names accepted by [`tensor_fixture`].
pub const TENSOR_FIXTURES: [&str; 3] = ["selenium", "cchs", "collider"];

/// Names accepted by [`poset_fixture`].
pub const POSET_FIXTURES: [&str; 6] = [
    "selenium_type",
    "selenium_concentration",
    "cchs_age",
    "cchs_year",
    "cchs_gender",
    "collider",
];

pub fn selenium() -> Tensor {
    Tensor::from_rows(&SELENIUM.map(|r| r.to_vec())).expect("fixture is well formed")
}

pub fn cchs() -> Tensor {
    let mut data = Vec::with_capacity(70);
    for a in 0..5 {
        for y in 0..7 {
            data.push(CCHS_FEMALE[a][y]);
            data.push(CCHS_MALE[a][y]);
        }
    }
    Tensor::new(vec![5, 7, 2], data).expect("fixture is well formed")
}

pub fn collider_matrix() -> Tensor {
    Tensor::from_rows(&COLLIDER_MATRIX.map(|r| r.to_vec())).expect("fixture is well formed")
}

pub fn poset_fixture(name: &str) -> Result<Poset> {
    let text = match name {
        "selenium_type" => SELENIUM_TYPE_POSET,
        "selenium_concentration" => SELENIUM_CONCENTRATION_POSET,
        "cchs_age" => CCHS_AGE_POSET,
        "cchs_year" => CCHS_YEAR_POSET,
        "cchs_gender" => CCHS_GENDER_POSET,
        "collider" => COLLIDER_POSET,
        other => {
            return Err(NdError::InvalidArgument(format!(
                "unknown poset fixture `{other}` (known: {})",
                POSET_FIXTURES.join(", ")
            )))
        }
    };
    parse_poset(text)
}

pub fn tensor_fixture(name: &str) -> Result<Tensor> {
    match name {
        "selenium" => Ok(selenium()),
        "cchs" => Ok(cchs()),
        "collider" => Ok(collider_matrix()),
        other => Err(NdError::InvalidArgument(format!(
            "unknown tensor fixture `{other}` (known: {})",
            TENSOR_FIXTURES.join(", ")
        ))),
    }
}

/// Poset fixture names for each mode of a tensor fixture.
pub fn fixture_poset_names(name: &str) -> Result<&'static [&'static str]> {
    match name {
        "selenium" => Ok(&["selenium_type", "selenium_concentration"]),
        "cchs" => Ok(&["cchs_age", "cchs_year", "cchs_gender"]),
        "collider" => Ok(&["collider", "collider"]),
        other => Err(NdError::InvalidArgument(format!("unknown tensor fixture `{other}`"))),
    }
}

/// Mode posets of a tensor fixture.
pub fn fixture_posets(name: &str) -> Result<Vec<Poset>> {
    fixture_poset_names(name)?
        .iter()
        .map(|n| poset_fixture(n))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use sha2::{Digest, Sha256};

    fn digest(values: impl IntoIterator<Item = f64>) -> String {
        let text: Vec<String> = values.into_iter().map(|v| format!("{v:.1}")).collect();
        let hash = Sha256::digest(text.join(",").as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    #[test]
    fn checksums() {
        assert_eq!(
            digest(selenium().into_data()),
            "da6bc0dd3147d36cf99bf4a3fd49d278e601dfb7e665ecbf0afc238df2839c8b"
        );
        assert_eq!(
            digest(cchs().into_data()),
            "6cfced8e5eba5b2dea99c36d5abbb93cfe0c73675b5dbe60f68ede11c05727d0"
        );
    }

    #[test]
    fn shapes_and_sums() {
        let c = cchs();
        assert_eq!(c.shape(), &[5, 7, 2]);
        assert_eq!(c.get(&[0, 6, 0]).unwrap(), 21.0);
        assert_eq!(c.get(&[4, 0, 1]).unwrap(), 6.3);
        let tss: f64 = c.data().iter().map(|v| v * v).sum();
        assert!((tss - 6925.26).abs() < 1e-9);
        let posets = fixture_posets("cchs").unwrap();
        assert_eq!(posets.iter().map(Poset::size).collect::<Vec<_>>(), c.shape());
        assert_eq!(posets[0].covers().len(), 5);
        assert_eq!(posets[1].covers().len(), 6);
        assert!(posets[2].is_trivial());
        let sel = fixture_posets("selenium").unwrap();
        assert_eq!(Poset::product(&sel).unwrap().covers().len(), 17);
    }
}
