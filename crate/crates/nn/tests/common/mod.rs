pub mod gradcheck;
pub mod toy;
