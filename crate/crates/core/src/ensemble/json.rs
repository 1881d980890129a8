use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::met::{ChkType, MetEnsemble, VarType};
use super::{DegreeDistribution, Ensemble, EnsembleError};

/// On-disk ensemble description.
///
/// ```json
/// {"type":"standard","rate":0.5,"lambda":{"2":0.2962},"rho":{"7":0.3094}}
/// {"type":"met","m_e":4,"var_types":[{"b":[0,1],"d":[2,0,0,0],"coeff":0.5}],
///  "chk_types":[{"d":[2,2,1,0],"coeff":0.4}]}
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum EnsembleFile {
    Standard {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rate: Option<f64>,
        #[serde(with = "degree_map")]
        lambda: BTreeMap<u32, f64>,
        #[serde(with = "degree_map")]
        rho: BTreeMap<u32, f64>,
    },
    Met {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rate: Option<f64>,
        m_e: usize,
        var_types: Vec<MetVarEntry>,
        chk_types: Vec<MetChkEntry>,
    },
}

/// Degree-keyed maps with JSON string keys such as `"7"`.
mod degree_map {
    use std::collections::BTreeMap;

    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<u32, f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(m.iter().map(|(k, v)| (k.to_string(), v)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<u32, f64>, D::Error> {
        BTreeMap::<String, f64>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| k.trim().parse::<u32>().map(|k| (k, v)).map_err(|_| D::Error::custom(format!("degree key {k:?} is not an integer"))))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetVarEntry {
    pub b: Vec<u32>,
    pub d: Vec<u32>,
    pub coeff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetChkEntry {
    pub d: Vec<u32>,
    pub coeff: f64,
}

impl EnsembleFile {
    /// Stated design rate, if the file carries one.
    pub fn rate(&self) -> Option<f64> {
        match self {
            EnsembleFile::Standard { rate, .. } | EnsembleFile::Met { rate, .. } => *rate,
        }
    }

    pub fn to_ensemble(&self) -> Result<Ensemble, EnsembleError> {
        match self {
            EnsembleFile::Standard { lambda, rho, .. } => Ok(Ensemble::Standard(DegreeDistribution::new(
                lambda.iter().map(|(&d, &c)| (d, c)),
                rho.iter().map(|(&d, &c)| (d, c)),
            )?)),
            EnsembleFile::Met { m_e, var_types, chk_types, .. } => {
                let vars = var_types
                    .iter()
                    .map(|v| {
                        let punctured = match v.b.as_slice() {
                            [0, 1] => false,
                            [1, 0] => true,
                            _ => return Err(EnsembleError::BadReceived(v.b.clone())),
                        };
                        Ok(VarType { punctured, degrees: v.d.clone(), coeff: v.coeff })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let chks = chk_types.iter().map(|c| ChkType { degrees: c.d.clone(), coeff: c.coeff }).collect();
                Ok(Ensemble::Met(MetEnsemble::new(*m_e, vars, chks)?))
            }
        }
    }

    pub fn from_ensemble(e: &Ensemble, rate: Option<f64>) -> Self {
        match e {
            Ensemble::Standard(dd) => EnsembleFile::Standard { rate, lambda: dd.lambda().clone(), rho: dd.rho().clone() },
            Ensemble::Met(m) => EnsembleFile::Met {
                rate,
                m_e: m.edge_classes(),
                var_types: m
                    .var_types()
                    .iter()
                    .map(|v| MetVarEntry { b: v.received().to_vec(), d: v.degrees.clone(), coeff: v.coeff })
                    .collect(),
                chk_types: m.chk_types().iter().map(|c| MetChkEntry { d: c.degrees.clone(), coeff: c.coeff }).collect(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_documented_shapes() {
        let s = r#"{"type":"standard","rate":0.5,"lambda":{"2":0.2962,"3":0.1749,"6":0.2418,"20":0.2872},"rho":{"7":0.3094,"8":0.6976}}"#;
        let f: EnsembleFile = serde_json::from_str(s).unwrap();
        assert_eq!(f.rate(), Some(0.5));
        let e = f.to_ensemble().unwrap();
        assert_eq!(e.as_standard().unwrap().lambda()[&20], 0.2872);

        let s = r#"{"type":"met","m_e":4,"var_types":[{"b":[0,1],"d":[2,0,0,0],"coeff":0.5},{"b":[1,0],"d":[0,3,3,0],"coeff":0.2}],"chk_types":[{"d":[2,2,1,0],"coeff":0.4}]}"#;
        let f: EnsembleFile = serde_json::from_str(s).unwrap();
        let m = f.to_ensemble().unwrap();
        let m = m.as_met().unwrap();
        assert!(m.var_types()[1].punctured);
        assert_eq!(m.edge_classes(), 4);
    }

    #[test]
    fn serializes_with_documented_keys() {
        let e = Ensemble::Standard(DegreeDistribution::regular(3, 6).unwrap());
        let s = serde_json::to_string(&EnsembleFile::from_ensemble(&e, Some(0.5))).unwrap();
        assert_eq!(s, r#"{"type":"standard","rate":0.5,"lambda":{"3":1.0},"rho":{"6":1.0}}"#);
    }

    #[test]
    fn rejects_multi_channel_received_degree() {
        let s = r#"{"type":"met","m_e":1,"var_types":[{"b":[0,1,0],"d":[3],"coeff":1.0}],"chk_types":[{"d":[6],"coeff":0.5}]}"#;
        let f: EnsembleFile = serde_json::from_str(s).unwrap();
        assert!(matches!(f.to_ensemble(), Err(EnsembleError::BadReceived(_))));
    }
}
