use serde::{Deserialize, Serialize};

use super::{split_multi_demand, EicpInstance, ModelError, RawEicp, RawUser};
use crate::gf::FieldOrder;

/// On-disk instance layout. All indices are 1-based.
///
/// ```json
/// { "q": 2, "num_users": 4, "num_messages": 4,
///   "side_info": [[1],[1,2,3],[2,4],[4]], "demands": [2,4,1,3] }
/// ```
///
/// `"wants": [[..], ..]` may replace `"demands"` for multi-demand users.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub q: u32,
    pub num_users: usize,
    pub num_messages: usize,
    pub side_info: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demands: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wants: Option<Vec<Vec<usize>>>,
}

impl InstanceFile {
    pub fn from_instance(inst: &EicpInstance) -> Self {
        InstanceFile {
            q: inst.q().get() as u32,
            num_users: inst.num_users(),
            num_messages: inst.num_messages(),
            side_info: inst
                .all_side_info()
                .iter()
                .map(|k| k.iter().map(|m| m + 1).collect())
                .collect(),
            demands: Some(inst.demands().iter().map(|d| d + 1).collect()),
            wants: None,
        }
    }

    pub fn into_instance(self) -> Result<EicpInstance, ModelError> {
        let q = FieldOrder::new(self.q)?;
        let m = self.num_messages;
        if self.side_info.len() != self.num_users {
            return Err(ModelError::LengthMismatch {
                what: "side_info",
                expected: self.num_users,
                found: self.side_info.len(),
            });
        }
        let zero_based = |what, list: &[usize]| -> Result<Vec<usize>, ModelError> {
            list.iter()
                .map(|&i| {
                    if i == 0 || i > m {
                        Err(ModelError::IndexOutOfRange {
                            what,
                            index: i,
                            max: m,
                        })
                    } else {
                        Ok(i - 1)
                    }
                })
                .collect()
        };
        let side_info = self
            .side_info
            .iter()
            .map(|k| zero_based("side-information message", k))
            .collect::<Result<Vec<_>, _>>()?;
        match (self.demands, self.wants) {
            (Some(d), None) => {
                if d.len() != self.num_users {
                    return Err(ModelError::LengthMismatch {
                        what: "demands",
                        expected: self.num_users,
                        found: d.len(),
                    });
                }
                let d = zero_based("demanded message", &d)?;
                EicpInstance::new(q, m, side_info, d)
            }
            (None, Some(w)) => {
                if w.len() != self.num_users {
                    return Err(ModelError::LengthMismatch {
                        what: "wants",
                        expected: self.num_users,
                        found: w.len(),
                    });
                }
                let users = w
                    .iter()
                    .zip(side_info)
                    .map(|(wants, knows)| {
                        Ok(RawUser {
                            wants: zero_based("wanted message", wants)?,
                            knows,
                        })
                    })
                    .collect::<Result<Vec<_>, ModelError>>()?;
                split_multi_demand(&RawEicp {
                    q,
                    num_messages: m,
                    users,
                })
            }
            _ => Err(ModelError::DemandForm),
        }
    }
}

/// Parses an instance file (JSON, 1-based indices).
pub fn parse_instance(text: &str) -> Result<EicpInstance, ModelError> {
    let file: InstanceFile = serde_json::from_str(text)?;
    file.into_instance()
}

/// Serializes an instance in single-demand form, one line.
pub fn serialize_instance(inst: &EicpInstance) -> String {
    serde_json::to_string(&InstanceFile::from_instance(inst)).expect("instance file serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::gf::GfError;

    const EXAMPLE_1: &str = r#"{ "q": 2, "num_users": 4, "num_messages": 4,
        "side_info": [[1],[1,2,3],[2,4],[4]], "demands": [2,4,1,3] }"#;

    #[test]
    fn parses_example_one() {
        let inst = parse_instance(EXAMPLE_1).unwrap();
        assert_eq!(inst, catalog::example_1());
        assert_eq!(inst.side_info(1), &[0, 1, 2]);
    }

    #[test]
    fn round_trips_example_two() {
        let e2 = catalog::example_2();
        assert_eq!(parse_instance(&serialize_instance(&e2)).unwrap(), e2);
    }

    #[test]
    fn wants_form_splits() {
        let text = r#"{ "q": 2, "num_users": 3, "num_messages": 3,
            "side_info": [[1],[2,3],[1,2]], "wants": [[2,3],[1],[3]] }"#;
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.num_users(), 4);
        assert_eq!(inst.demands(), &[1, 2, 0, 2]);
        assert_eq!(inst.side_info(0), inst.side_info(1));
    }

    #[test]
    fn distinct_diagnostics() {
        let non_prime = EXAMPLE_1.replace("\"q\": 2", "\"q\": 4");
        assert!(matches!(
            parse_instance(&non_prime),
            Err(ModelError::Field(GfError::NotPrime(4)))
        ));
        assert_eq!(
            parse_instance(&non_prime).unwrap_err().to_string(),
            "field order must be prime (got 4)"
        );
        let out_of_range = EXAMPLE_1.replace("[2,4,1,3]", "[2,4,1,5]");
        assert!(matches!(
            parse_instance(&out_of_range),
            Err(ModelError::IndexOutOfRange { index: 5, .. })
        ));
        let zero = EXAMPLE_1.replace("[[1],", "[[0],");
        assert!(matches!(
            parse_instance(&zero),
            Err(ModelError::IndexOutOfRange { index: 0, .. })
        ));
        assert!(matches!(
            parse_instance("{ not json"),
            Err(ModelError::Json(_))
        ));
        let unknown = EXAMPLE_1.replace("\"q\": 2", "\"q\": 2, \"extra\": 1");
        assert!(matches!(parse_instance(&unknown), Err(ModelError::Json(_))));
        let both = EXAMPLE_1.replace("}", ", \"wants\": [[2],[4],[1],[3]] }");
        assert!(matches!(parse_instance(&both), Err(ModelError::DemandForm)));
    }
}
