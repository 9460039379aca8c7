//! Scalar linear embedded index codes: representation, decodability and
//! decoder extraction.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::{EchelonBasis, FieldOrder, GfError, GfMatrix, GfVector};
use crate::model::EicpInstance;

#[derive(Debug, Error)]
pub enum CodeError {
    #[error(transparent)]
    Field(#[from] GfError),
    #[error("malformed code file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("transmission {index} is all zero")]
    ZeroTransmission { index: usize },
    #[error("transmitter {user} out of range 1..={max}")]
    TransmitterOutOfRange { user: usize, max: usize },
    #[error("transmission {index} has {found} coefficients, expected {expected}")]
    Length {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("code is over F_{code_q} with {code_m} messages but the instance is over F_{inst_q} with {inst_m}")]
    InstanceMismatch {
        code_q: u8,
        code_m: usize,
        inst_q: u8,
        inst_m: usize,
    },
    #[error("transmission {index} by user {user} uses messages outside its side information")]
    SupportViolation { index: usize, user: usize },
    #[error("user {user} cannot decode its demand")]
    NotDecodable { user: usize },
}

/// One coded broadcast: `coeffs · x` sent by `transmitter`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transmission {
    pub transmitter: usize,
    pub coeffs: GfVector,
}

impl Transmission {
    pub fn new(transmitter: usize, coeffs: GfVector) -> Self {
        Transmission {
            transmitter,
            coeffs,
        }
    }
}

impl fmt::Display for Transmission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .coords()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(k, &c)| {
                if c == 1 {
                    format!("x{}", k + 1)
                } else {
                    format!("{c}x{}", k + 1)
                }
            })
            .collect();
        write!(f, "u{}: {}", self.transmitter + 1, terms.join(" + "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EmbeddedIndexCode {
    q: FieldOrder,
    num_messages: usize,
    transmissions: Vec<Transmission>,
}

impl EmbeddedIndexCode {
    /// Checks field and length of every transmission. Supports are checked
    /// by [`verify_code`].
    pub fn new(
        q: FieldOrder,
        num_messages: usize,
        transmissions: Vec<Transmission>,
    ) -> Result<Self, CodeError> {
        for (index, t) in transmissions.iter().enumerate() {
            if t.coeffs.field() != q {
                return Err(GfError::FieldMismatch {
                    expected: q.get(),
                    found: t.coeffs.field().get(),
                }
                .into());
            }
            if t.coeffs.len() != num_messages {
                return Err(CodeError::Length {
                    index,
                    expected: num_messages,
                    found: t.coeffs.len(),
                });
            }
            if t.coeffs.is_zero() {
                return Err(CodeError::ZeroTransmission { index });
            }
        }
        Ok(EmbeddedIndexCode {
            q,
            num_messages,
            transmissions,
        })
    }

    pub fn empty(q: FieldOrder, num_messages: usize) -> Self {
        EmbeddedIndexCode {
            q,
            num_messages,
            transmissions: Vec::new(),
        }
    }

    pub fn field(&self) -> FieldOrder {
        self.q
    }

    pub fn num_messages(&self) -> usize {
        self.num_messages
    }

    pub fn transmissions(&self) -> &[Transmission] {
        &self.transmissions
    }

    /// Number of transmissions l.
    pub fn len(&self) -> usize {
        self.transmissions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transmissions.is_empty()
    }

    /// T_u, the distinct transmitters, ascending.
    pub fn transmitters(&self) -> Vec<usize> {
        self.transmissions
            .iter()
            .map(|t| t.transmitter)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// l_j, the number of transmissions made by `user`.
    pub fn load_of(&self, user: usize) -> usize {
        self.transmissions
            .iter()
            .filter(|t| t.transmitter == user)
            .count()
    }

    /// Columns of L, in transmission order.
    pub fn columns(&self) -> Vec<GfVector> {
        self.transmissions
            .iter()
            .map(|t| t.coeffs.clone())
            .collect()
    }

    pub fn with_transmissions(&self, transmissions: Vec<Transmission>) -> Result<Self, CodeError> {
        Self::new(self.q, self.num_messages, transmissions)
    }
}

impl fmt::Display for EmbeddedIndexCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.transmissions.iter().map(|t| t.to_string()).collect();
        write!(f, "[{}]", parts.join("; "))
    }
}

fn check_instance(code: &EmbeddedIndexCode, inst: &EicpInstance) -> Result<(), CodeError> {
    if code.q != inst.q() || code.num_messages != inst.num_messages() {
        return Err(CodeError::InstanceMismatch {
            code_q: code.q.get(),
            code_m: code.num_messages,
            inst_q: inst.q().get(),
            inst_m: inst.num_messages(),
        });
    }
    for t in &code.transmissions {
        if t.transmitter >= inst.num_users() {
            return Err(CodeError::TransmitterOutOfRange {
                user: t.transmitter + 1,
                max: inst.num_users(),
            });
        }
    }
    Ok(())
}

/// The M x l matrix L whose columns are the transmissions.
pub fn assemble_matrix(
    code: &EmbeddedIndexCode,
    inst: &EicpInstance,
) -> Result<GfMatrix, CodeError> {
    check_instance(code, inst)?;
    for (index, t) in code.transmissions.iter().enumerate() {
        if !t.coeffs.supported_in(inst.side_info(t.transmitter)) {
            return Err(CodeError::SupportViolation {
                index,
                user: t.transmitter + 1,
            });
        }
    }
    Ok(GfMatrix::from_columns(
        code.q,
        code.num_messages,
        &code.columns(),
    )?)
}

fn decodable_from<'a>(
    columns: impl Iterator<Item = &'a GfVector>,
    inst: &EicpInstance,
    user: usize,
) -> bool {
    let q = inst.q();
    let m = inst.num_messages();
    let mut basis = EchelonBasis::new(q, m);
    for &k in inst.side_info(user) {
        basis
            .insert(&GfVector::unit(q, m, k))
            .expect("dimensions agree");
    }
    for c in columns {
        basis.insert(c).expect("dimensions agree");
    }
    basis
        .in_span(&GfVector::unit(q, m, inst.demand(user)))
        .expect("dimensions agree")
}

/// e_{d_i} lies in span(L) + span{e_k : k in K_i}.
pub fn can_decode(code: &EmbeddedIndexCode, inst: &EicpInstance, user: usize) -> bool {
    decodable_from(code.transmissions.iter().map(|t| &t.coeffs), inst, user)
}

/// Same test using only transmissions by users other than `user`.
pub fn can_decode_from_others(code: &EmbeddedIndexCode, inst: &EicpInstance, user: usize) -> bool {
    decodable_from(
        code.transmissions
            .iter()
            .filter(|t| t.transmitter != user)
            .map(|t| &t.coeffs),
        inst,
        user,
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserDecode {
    /// 1-based.
    pub user: usize,
    pub decodable: bool,
    pub decodable_from_others: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportViolation {
    /// 1-based transmission position.
    pub transmission: usize,
    /// 1-based transmitter.
    pub user: usize,
    /// 1-based messages used but not held.
    pub messages: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeReport {
    pub length: usize,
    pub users: Vec<UserDecode>,
    pub support_violations: Vec<SupportViolation>,
    pub overall: bool,
}

impl DecodeReport {
    /// 1-based users that cannot decode.
    pub fn failing_users(&self) -> Vec<usize> {
        self.users
            .iter()
            .filter(|u| !u.decodable_from_others)
            .map(|u| u.user)
            .collect()
    }
}

/// Support and decodability check for every user.
pub fn verify_code(
    code: &EmbeddedIndexCode,
    inst: &EicpInstance,
) -> Result<DecodeReport, CodeError> {
    let users: Vec<usize> = (0..inst.num_users()).collect();
    verify_code_for_users(code, inst, &users)
}

/// [`verify_code`] restricted to a subset of users (0-based).
///
/// `overall` requires both decodability views to agree; a disagreement would
/// mean a user relies on hearing itself.
pub fn verify_code_for_users(
    code: &EmbeddedIndexCode,
    inst: &EicpInstance,
    users: &[usize],
) -> Result<DecodeReport, CodeError> {
    check_instance(code, inst)?;
    let support_violations: Vec<SupportViolation> = code
        .transmissions
        .iter()
        .enumerate()
        .filter_map(|(i, t)| {
            let outside: Vec<usize> = t
                .coeffs
                .support()
                .into_iter()
                .filter(|&k| !inst.knows(t.transmitter, k))
                .map(|k| k + 1)
                .collect();
            (!outside.is_empty()).then(|| SupportViolation {
                transmission: i + 1,
                user: t.transmitter + 1,
                messages: outside,
            })
        })
        .collect();
    let users: Vec<UserDecode> = users
        .iter()
        .map(|&u| UserDecode {
            user: u + 1,
            decodable: can_decode(code, inst, u),
            decodable_from_others: can_decode_from_others(code, inst, u),
        })
        .collect();
    let overall = support_violations.is_empty()
        && users.iter().all(|u| u.decodable && u.decodable_from_others);
    Ok(DecodeReport {
        length: code.len(),
        users,
        support_violations,
        overall,
    })
}

/// Smallest-index holder of every message in `support`, excluding `except`.
pub fn eligible_transmitter(
    inst: &EicpInstance,
    support: &[usize],
    except: Option<usize>,
) -> Option<usize> {
    inst.holders_of(support, except).next()
}

/// One plain transmission per distinct demanded message, sent by its
/// smallest-index holder.
pub fn uncoded_scheme(inst: &EicpInstance) -> EmbeddedIndexCode {
    let q = inst.q();
    let m = inst.num_messages();
    let demanded: BTreeSet<usize> = inst.demands().iter().copied().collect();
    let transmissions = demanded
        .into_iter()
        .map(|x| {
            let t = eligible_transmitter(inst, &[x], None).expect("valid instances have holders");
            Transmission::new(t, GfVector::unit(q, m, x))
        })
        .collect();
    EmbeddedIndexCode {
        q,
        num_messages: m,
        transmissions,
    }
}

/// Decoder for `user`: `combo` over transmissions and `correction` over
/// K_i (ascending) with `sum combo_t T_t - sum correction_k x_k = x_{d_i}`.
pub fn decode_coeffs(
    code: &EmbeddedIndexCode,
    inst: &EicpInstance,
    user: usize,
) -> Result<(GfVector, GfVector), CodeError> {
    check_instance(code, inst)?;
    let q = inst.q();
    let m = inst.num_messages();
    let k = inst.side_info(user);
    let l = code.len();
    let mut cols = code.columns();
    cols.extend(k.iter().map(|&j| GfVector::unit(q, m, j)));
    let a = GfMatrix::from_columns(q, m, &cols)?;
    let y = a
        .solve(&GfVector::unit(q, m, inst.demand(user)))?
        .ok_or(CodeError::NotDecodable { user: user + 1 })?;
    let combo = GfVector::new(q, y.coords()[..l].iter().map(|&c| c as i64));
    let correction = GfVector::new(q, y.coords()[l..].iter().map(|&c| -(c as i64)));
    Ok((combo, correction))
}

/// Evaluates a decoder on concrete message values.
pub fn apply_decoder(
    code: &EmbeddedIndexCode,
    inst: &EicpInstance,
    user: usize,
    combo: &GfVector,
    correction: &GfVector,
    x: &GfVector,
) -> Result<u8, CodeError> {
    let q = inst.q();
    let mut acc = 0u8;
    for (t, &c) in code.transmissions.iter().zip(combo.coords()) {
        acc = q.add(acc, q.mul(c, t.coeffs.dot(x)?));
    }
    for (&k, &c) in inst.side_info(user).iter().zip(correction.coords()) {
        acc = q.sub(acc, q.mul(c, x.get(k)));
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmissionFile {
    /// 1-based transmitter.
    pub user: usize,
    pub coeffs: Vec<i64>,
}

/// On-disk code layout, 1-based transmitters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeFile {
    pub transmissions: Vec<TransmissionFile>,
}

impl CodeFile {
    pub fn from_code(code: &EmbeddedIndexCode) -> Self {
        CodeFile {
            transmissions: code
                .transmissions
                .iter()
                .map(|t| TransmissionFile {
                    user: t.transmitter + 1,
                    coeffs: t.coeffs.coords().iter().map(|&c| c as i64).collect(),
                })
                .collect(),
        }
    }

    pub fn into_code(self, inst: &EicpInstance) -> Result<EmbeddedIndexCode, CodeError> {
        let n = inst.num_users();
        let transmissions = self
            .transmissions
            .into_iter()
            .map(|t| {
                if t.user == 0 || t.user > n {
                    return Err(CodeError::TransmitterOutOfRange {
                        user: t.user,
                        max: n,
                    });
                }
                Ok(Transmission::new(
                    t.user - 1,
                    GfVector::new(inst.q(), t.coeffs),
                ))
            })
            .collect::<Result<Vec<_>, _>>()?;
        EmbeddedIndexCode::new(inst.q(), inst.num_messages(), transmissions)
    }
}

pub fn parse_code(text: &str, inst: &EicpInstance) -> Result<EmbeddedIndexCode, CodeError> {
    let file: CodeFile = serde_json::from_str(text)?;
    file.into_code(inst)
}

pub fn serialize_code(code: &EmbeddedIndexCode) -> String {
    serde_json::to_string(&CodeFile::from_code(code)).expect("code file serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    const EXAMPLE_1_CODE: &str = r#"{ "transmissions": [ { "user": 2, "coeffs": [1,1,0,0] },
        { "user": 2, "coeffs": [0,0,1,0] }, { "user": 3, "coeffs": [0,0,0,1] } ] }"#;

    fn example_1_code() -> (EicpInstance, EmbeddedIndexCode) {
        let inst = catalog::example_1();
        let code = parse_code(EXAMPLE_1_CODE, &inst).unwrap();
        (inst, code)
    }

    #[test]
    fn example_one_matrix_and_report() {
        let (inst, code) = example_1_code();
        let l = assemble_matrix(&code, &inst).unwrap();
        assert_eq!((l.rows(), l.cols()), (4, 3));
        assert_eq!(l.column(0).coords(), &[1, 1, 0, 0]);
        assert_eq!(l.column(2).coords(), &[0, 0, 0, 1]);
        assert_eq!(l.rank(), 3);
        let report = verify_code(&code, &inst).unwrap();
        assert!(report.overall);
        assert_eq!(report.length, 3);
        assert_eq!(code.transmitters(), vec![1, 2]);
        assert_eq!(code.load_of(1), 2);
    }

    #[test]
    fn truncated_code_flags_user_two() {
        let (inst, code) = example_1_code();
        let short = code
            .with_transmissions(code.transmissions()[..2].to_vec())
            .unwrap();
        let report = verify_code(&short, &inst).unwrap();
        assert!(!report.overall);
        assert_eq!(report.failing_users(), vec![2]);
    }

    #[test]
    fn support_violation_listed() {
        let inst = catalog::example_1();
        let q = inst.q();
        let bad = EmbeddedIndexCode::new(q, 4, vec![Transmission::new(0, GfVector::unit(q, 4, 1))])
            .unwrap();
        let report = verify_code(&bad, &inst).unwrap();
        assert_eq!(
            report.support_violations,
            vec![SupportViolation {
                transmission: 1,
                user: 1,
                messages: vec![2]
            }]
        );
        assert!(matches!(
            assemble_matrix(&bad, &inst),
            Err(CodeError::SupportViolation { index: 0, user: 1 })
        ));
    }

    #[test]
    fn empty_and_uncoded() {
        let inst = catalog::example_1();
        let empty = EmbeddedIndexCode::empty(inst.q(), 4);
        assert_eq!(assemble_matrix(&empty, &inst).unwrap().cols(), 0);
        assert!(!can_decode(&empty, &inst, 0));
        let unc = uncoded_scheme(&inst);
        assert_eq!(unc.len(), 4);
        assert!(verify_code(&unc, &inst).unwrap().overall);

        let all_five = EicpInstance::from_one_based(
            2,
            5,
            &[&[1, 2], &[3, 4], &[1, 5], &[2, 3, 4]],
            &[5, 5, 2, 5],
        )
        .unwrap();
        // user 3 knows x5; users 1, 2, 4 demand it, user 3 demands x2
        let unc = uncoded_scheme(&all_five);
        assert_eq!(unc.len(), 2);
        assert!(verify_code(&unc, &all_five).unwrap().overall);
    }

    #[test]
    fn decoders_example_one() {
        let (inst, code) = example_1_code();
        let (combo, corr) = decode_coeffs(&code, &inst, 0).unwrap();
        assert_eq!(combo.coords(), &[1, 0, 0]);
        assert_eq!(corr.coords(), &[1]);
        for u in 0..4 {
            let (combo, corr) = decode_coeffs(&code, &inst, u).unwrap();
            for seed in 0..16u64 {
                let x = GfVector::new(inst.q(), (0..4).map(|k| ((seed >> k) & 1) as i64));
                assert_eq!(
                    apply_decoder(&code, &inst, u, &combo, &corr, &x).unwrap(),
                    x.get(inst.demand(u))
                );
            }
        }
    }

    #[test]
    fn tree_decoder_alternates() {
        let q = FieldOrder::new(3).unwrap();
        let inst = catalog::regular_tree(4, q);
        let code = EmbeddedIndexCode::new(
            q,
            4,
            vec![
                Transmission::new(0, GfVector::indicator(q, 4, &[1, 2])),
                Transmission::new(1, GfVector::indicator(q, 4, &[2, 3])),
                Transmission::new(2, GfVector::indicator(q, 4, &[3, 0])),
            ],
        )
        .unwrap();
        assert!(verify_code(&code, &inst).unwrap().overall);
        let (combo, _) = decode_coeffs(&code, &inst, 0).unwrap();
        // T_3 - T_2 + T_1 = x_1 + x_2 over F_3
        assert_eq!(combo.coords(), &[1, 2, 1]);
    }

    #[test]
    fn code_file_round_trip() {
        let (inst, code) = example_1_code();
        assert_eq!(parse_code(&serialize_code(&code), &inst).unwrap(), code);
        assert!(matches!(
            parse_code(
                r#"{"transmissions":[{"user":9,"coeffs":[1,0,0,0]}]}"#,
                &inst
            ),
            Err(CodeError::TransmitterOutOfRange { user: 9, .. })
        ));
        assert!(matches!(
            parse_code(r#"{"transmissions":[{"user":1,"coeffs":[1,0]}]}"#, &inst),
            Err(CodeError::Length { .. })
        ));
    }
}
