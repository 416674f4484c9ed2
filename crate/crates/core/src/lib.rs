pub mod frontend;
pub mod kb;
pub mod polyset;
pub mod sem;
pub mod typeinf;
pub mod scop;
pub mod scheduler;
pub mod codegen;
pub mod driver;
