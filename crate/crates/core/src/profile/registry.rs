//! Name-keyed builders for the profile catalogue.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use super::catalog::{Catenoid, Cone, Cosine, Cylinder, GaussianBump, Power, ReciprocalMollified, Tabulated};
use super::{ProfileCurve, ProfileError};

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Number(f64),
    List(Vec<f64>),
    Text(String),
}

/// Parameters for a profile builder. Relative file paths resolve against
/// `base_dir`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProfileParams {
    pub values: BTreeMap<String, ParamValue>,
    pub base_dir: Option<PathBuf>,
}

impl ProfileParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.values.insert(key.to_string(), ParamValue::Number(value));
        self
    }

    pub fn with_list(mut self, key: &str, value: Vec<f64>) -> Self {
        self.values.insert(key.to_string(), ParamValue::List(value));
        self
    }

    pub fn with_text(mut self, key: &str, value: &str) -> Self {
        self.values.insert(key.to_string(), ParamValue::Text(value.to_string()));
        self
    }

    pub fn insert(&mut self, key: &str, value: ParamValue) {
        self.values.insert(key.to_string(), value);
    }

    pub fn number(&self, key: &str) -> Result<f64, ProfileError> {
        match self.values.get(key) {
            Some(ParamValue::Number(v)) => Ok(*v),
            Some(_) => Err(ProfileError::InvalidParameter(format!("{key} must be a number"))),
            None => Err(ProfileError::InvalidParameter(format!("missing parameter {key}"))),
        }
    }

    pub fn number_or(&self, key: &str, default: f64) -> Result<f64, ProfileError> {
        if self.values.contains_key(key) {
            self.number(key)
        } else {
            Ok(default)
        }
    }

    fn list(&self, key: &str) -> Option<Result<Vec<f64>, ProfileError>> {
        self.values.get(key).map(|v| match v {
            ParamValue::List(l) => Ok(l.clone()),
            ParamValue::Number(x) => Ok(vec![*x]),
            ParamValue::Text(_) => Err(ProfileError::InvalidParameter(format!("{key} must be a list of numbers"))),
        })
    }

    fn text(&self, key: &str) -> Result<&str, ProfileError> {
        match self.values.get(key) {
            Some(ParamValue::Text(s)) => Ok(s),
            Some(_) => Err(ProfileError::InvalidParameter(format!("{key} must be a string"))),
            None => Err(ProfileError::InvalidParameter(format!("missing parameter {key}"))),
        }
    }

    /// Reject keys the builder did not consume.
    fn only(&self, allowed: &[&str]) -> Result<(), ProfileError> {
        match self.values.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(ProfileError::InvalidParameter(format!(
                "unexpected parameter {k} (allowed: {})",
                allowed.join(", ")
            ))),
            None => Ok(()),
        }
    }
}

pub type ProfileBuilder = fn(&ProfileParams) -> Result<Arc<dyn ProfileCurve>, ProfileError>;

#[derive(Debug, Clone)]
pub struct ProfileRegistry {
    builders: BTreeMap<String, ProfileBuilder>,
}

impl Default for ProfileRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl ProfileRegistry {
    pub fn empty() -> Self {
        Self {
            builders: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register("cylinder", build_cylinder);
        reg.register("catenoid", build_catenoid);
        reg.register("cosine", build_cosine);
        reg.register("cone", build_cone);
        reg.register("power", build_power);
        reg.register("reciprocal-mollified", build_reciprocal);
        reg.register("gaussian-bump", build_gaussian);
        reg.register("tabulated", build_tabulated);
        reg
    }

    /// Add or replace a builder.
    pub fn register(&mut self, kind: &str, builder: ProfileBuilder) {
        self.builders.insert(kind.to_string(), builder);
    }

    pub fn kinds(&self) -> impl Iterator<Item = &str> {
        self.builders.keys().map(String::as_str)
    }

    pub fn build(&self, kind: &str, params: &ProfileParams) -> Result<Arc<dyn ProfileCurve>, ProfileError> {
        let builder = self
            .builders
            .get(kind)
            .ok_or_else(|| ProfileError::UnknownKind(kind.to_string()))?;
        builder(params)
    }
}

fn build_cylinder(p: &ProfileParams) -> Result<Arc<dyn ProfileCurve>, ProfileError> {
    p.only(&["R"])?;
    Ok(Arc::new(Cylinder::new(p.number_or("R", 1.0)?)?))
}

fn build_catenoid(p: &ProfileParams) -> Result<Arc<dyn ProfileCurve>, ProfileError> {
    p.only(&["a"])?;
    Ok(Arc::new(Catenoid::new(p.number_or("a", 1.0)?)?))
}

fn build_cosine(p: &ProfileParams) -> Result<Arc<dyn ProfileCurve>, ProfileError> {
    p.only(&["A", "B", "k"])?;
    Ok(Arc::new(Cosine::new(p.number("A")?, p.number("B")?, p.number_or("k", 1.0)?)?))
}

fn build_cone(p: &ProfileParams) -> Result<Arc<dyn ProfileCurve>, ProfileError> {
    p.only(&["m", "apex"])?;
    Ok(Arc::new(Cone::new(p.number_or("m", 1.0)?, p.number_or("apex", 0.0)?)?))
}

fn build_power(p: &ProfileParams) -> Result<Arc<dyn ProfileCurve>, ProfileError> {
    p.only(&["c", "alpha", "zeros", "apex"])?;
    let zeros = match (p.list("zeros"), p.list("apex")) {
        (Some(_), Some(_)) => {
            return Err(ProfileError::InvalidParameter(
                "give either zeros or apex, not both".into(),
            ))
        }
        (Some(z), None) | (None, Some(z)) => z?,
        (None, None) => vec![0.0],
    };
    Ok(Arc::new(Power::new(p.number_or("c", 1.0)?, p.number("alpha")?, zeros)?))
}

fn build_reciprocal(p: &ProfileParams) -> Result<Arc<dyn ProfileCurve>, ProfileError> {
    p.only(&["z_knee"])?;
    Ok(Arc::new(ReciprocalMollified::new(p.number_or("z_knee", 1.0)?)?))
}

fn build_gaussian(p: &ProfileParams) -> Result<Arc<dyn ProfileCurve>, ProfileError> {
    p.only(&[])?;
    Ok(Arc::new(GaussianBump))
}

fn build_tabulated(p: &ProfileParams) -> Result<Arc<dyn ProfileCurve>, ProfileError> {
    p.only(&["file"])?;
    let file = PathBuf::from(p.text("file")?);
    let path = match &p.base_dir {
        Some(dir) if file.is_relative() => dir.join(&file),
        _ => file,
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| ProfileError::Tabulated(format!("{}: {e}", path.display())))?;
    Ok(Arc::new(Tabulated::parse(&text)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Side;

    #[test]
    fn builtin_kinds() {
        let reg = ProfileRegistry::builtin();
        let kinds: Vec<&str> = reg.kinds().collect();
        assert_eq!(kinds.len(), 8);
        assert!(kinds.contains(&"reciprocal-mollified"));
    }

    #[test]
    fn builds_with_defaults_and_params() {
        let reg = ProfileRegistry::builtin();
        let cat = reg.build("catenoid", &ProfileParams::new()).unwrap();
        assert_eq!(cat.eval(0.0, Side::Right).unwrap().value, 1.0);
        let cos = reg
            .build("cosine", &ProfileParams::new().with("A", 2.0).with("B", 1.0))
            .unwrap();
        assert_eq!(cos.kind(), "cosine");
        let quartic = reg
            .build(
                "power",
                &ProfileParams::new().with("alpha", 2.0).with_list("zeros", vec![-2.0, 2.0]),
            )
            .unwrap();
        assert_eq!(quartic.eval(0.0, Side::Right).unwrap().value, 16.0);
    }

    #[test]
    fn rejects_unknown_kind_and_params() {
        let reg = ProfileRegistry::builtin();
        assert!(matches!(
            reg.build("torus", &ProfileParams::new()),
            Err(ProfileError::UnknownKind(_))
        ));
        assert!(matches!(
            reg.build("catenoid", &ProfileParams::new().with("b", 1.0)),
            Err(ProfileError::InvalidParameter(_))
        ));
        assert!(reg.build("catenoid", &ProfileParams::new().with("a", -1.0)).is_err());
    }

    #[test]
    fn custom_builder() {
        fn unit_cylinder(_: &ProfileParams) -> Result<Arc<dyn ProfileCurve>, ProfileError> {
            Ok(Arc::new(Cylinder::new(1.0)?))
        }
        let mut reg = ProfileRegistry::empty();
        reg.register("unit", unit_cylinder);
        assert_eq!(reg.build("unit", &ProfileParams::new()).unwrap().kind(), "cylinder");
    }

    #[test]
    fn tabulated_from_relative_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("p.txt"), "0 1\n1 2\n2 3\n3 4\n").unwrap();
        let params = ProfileParams {
            base_dir: Some(dir.path().to_path_buf()),
            ..ProfileParams::new().with_text("file", "p.txt")
        };
        let t = ProfileRegistry::builtin().build("tabulated", &params).unwrap();
        assert!((t.eval(1.5, Side::Right).unwrap().value - 2.5).abs() < 1e-12);
    }
}
