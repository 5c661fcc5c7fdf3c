//! Consultation audio in, structured anamnesis summary and EHR fill plan out.
//!
//! Stages: [`audio`] decodes and normalizes uploads, [`transcription`] turns
//! a 16 kHz clip into text, [`summarizer`] extracts the eight-key summary,
//! and [`form_mapper`] compiles it into a [`form_mapper::FillPlan`]. The
//! [`orchestrator`] strings them together with durable session records.

pub mod audio;
pub mod digest;
pub mod form_mapper;
pub mod http;
pub mod orchestrator;
pub mod scenario;
pub mod summarizer;
pub mod transcription;
