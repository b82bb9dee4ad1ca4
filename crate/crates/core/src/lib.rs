pub mod amplitudes;
pub mod kinematics;
pub mod quadrature;
pub mod entanglement;
pub mod engine;
pub mod reference;
pub mod report;
pub mod verify;
