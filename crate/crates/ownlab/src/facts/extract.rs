//! Access extraction: which paths are read, written, and moved where.

use super::LoanId;
use crate::lang::{
    Instruction, InstructionId, Operand, OwnershipQualifier, Path, Rvalue, TypedProgram,
};
use std::collections::BTreeSet;

pub struct Accesses {
    pub read_at: BTreeSet<(Path, InstructionId)>,
    pub written_at: BTreeSet<(Path, InstructionId)>,
    pub moved_at: BTreeSet<(Path, InstructionId)>,
    pub loans: BTreeSet<(LoanId, InstructionId)>,
}

/// Classifies every access in one function.
///
/// * assignment destinations are writes;
/// * using a path reads it, and moves it when its type is movable — a move
///   is always also a read-like access;
/// * a shared borrow reads its target, a unique borrow writes it;
/// * `if` conditions, call arguments, and return operands are reads (and
///   moves when movable);
/// * `drop` consumes its operand: a read, plus a move when movable.
pub fn extract_function(tp: &TypedProgram, func: &str) -> Accesses {
    let f = tp.function(func);
    let typed = tp.typed(func);
    let mut acc = Accesses {
        read_at: BTreeSet::new(),
        written_at: BTreeSet::new(),
        moved_at: BTreeSet::new(),
        loans: BTreeSet::new(),
    };

    for (index, instr) in f.body.instructions.iter().enumerate() {
        let at = InstructionId::new(func, index);
        let read = |acc: &mut Accesses, p: &Path| {
            acc.read_at.insert((p.clone(), at.clone()));
            if tp.is_movable(func, p) {
                acc.moved_at.insert((p.clone(), at.clone()));
            }
        };
        match instr {
            Instruction::Assign { dest, rv } => {
                acc.written_at.insert((dest.clone(), at.clone()));
                match rv {
                    Rvalue::Const(_) => {}
                    Rvalue::Use(p) => read(&mut acc, p),
                    Rvalue::Loan(l) => {
                        match l.qualifier {
                            OwnershipQualifier::Shared => {
                                acc.read_at.insert((l.target.clone(), at.clone()));
                            }
                            OwnershipQualifier::Unique => {
                                acc.written_at.insert((l.target.clone(), at.clone()));
                            }
                        }
                        let lifetime = typed.loan_lifetimes[&index].clone();
                        acc.loans.insert((
                            LoanId {
                                issued_at: at.clone(),
                                path: l.target.clone(),
                                qualifier: l.qualifier,
                                lifetime,
                            },
                            at.clone(),
                        ));
                    }
                    Rvalue::Tuple(ops) => {
                        for op in ops {
                            if let Operand::Path(p) = op {
                                read(&mut acc, p);
                            }
                        }
                    }
                    Rvalue::Box(Operand::Path(p)) => read(&mut acc, p),
                    Rvalue::Box(Operand::Const(_)) => {}
                }
            }
            Instruction::If { cond, .. } => {
                acc.read_at.insert((cond.clone(), at.clone()));
            }
            Instruction::Call { dest, args, .. } => {
                acc.written_at.insert((dest.clone(), at.clone()));
                for a in args {
                    read(&mut acc, a);
                }
            }
            Instruction::Return { operand } => read(&mut acc, operand),
            Instruction::Drop { operand } => read(&mut acc, operand),
        }
    }
    acc
}
