//! Second-order forward jets and a reverse-mode engine over jet-valued tapes.
//!
//! A [`Jet`] carries `(f, f', f'')` with respect to the input `x`. The
//! [`Tape`] records a jet computation whose leaves include registered
//! parameters; [`Tape::backward`] then pulls an adjoint triple
//! `(dL/df, dL/df', dL/df'')` back to every parameter in a single sweep,
//! which is how losses involving `f'` and `f''` get their weight gradients.

mod jet;
mod tape;

pub use jet::{jet_apply, Jet};
pub use tape::{tape_backward, tape_forward, Gradient, NodeId, Tape};
