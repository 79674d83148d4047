pub mod exact;
pub mod flow;
pub mod kovacic;
pub mod certifier;
pub mod variational;
pub mod reference;
