use std::time::Duration;

use async_trait::async_trait;
use reqwest::multipart::{Form, Part};
use serde::Deserialize;

use super::{RecognizedSpeech, SpeechRequest, SpeechToText, TranscriptionBackendDescriptor, TranscriptionError};
use crate::http::{bearer_token, build_client, send_with_retry, NetworkOptions, RetryPolicy};

/// Multipart client for hosted speech-to-text APIs: one `file` part holding
/// the WAV rendering plus `model` and `language` text fields. The response
/// must be a JSON object with a `text` member.
#[derive(Debug)]
pub struct RemoteTranscriber {
    client: reqwest::Client,
    endpoint_url: String,
    token_env: Option<String>,
    retry: RetryPolicy,
}

#[derive(Debug, Deserialize)]
struct TranscriptionResponse {
    text: String,
    #[serde(default)]
    language: Option<String>,
}

impl RemoteTranscriber {
    pub fn new(
        descriptor: &TranscriptionBackendDescriptor,
        network: &NetworkOptions,
    ) -> Result<Self, TranscriptionError> {
        let client =
            build_client(Duration::from_secs_f64(descriptor.timeout_s), network).map_err(TranscriptionError::Config)?;
        Ok(Self {
            client,
            endpoint_url: descriptor.endpoint_url.clone(),
            token_env: descriptor.api_key_env.clone(),
            retry: RetryPolicy::with_max_retries(descriptor.max_retries),
        })
    }
}

#[async_trait]
impl SpeechToText for RemoteTranscriber {
    async fn recognize(&self, request: &SpeechRequest<'_>) -> Result<RecognizedSpeech, TranscriptionError> {
        let token = bearer_token(self.token_env.as_deref());
        let body = send_with_retry(self.retry, || {
            let file = Part::bytes(request.wav.to_vec())
                .file_name("audio.wav")
                .mime_str("audio/wav")
                .expect("static mime type parses");
            let form = Form::new()
                .part("file", file)
                .text("model", request.model.to_string())
                .text("language", request.language_hint.to_string());
            let mut builder = self.client.post(&self.endpoint_url).multipart(form);
            if let Some(token) = &token {
                builder = builder.bearer_auth(token);
            }
            builder
        })
        .await?;

        let parsed: TranscriptionResponse =
            serde_json::from_str(&body).map_err(|e| TranscriptionError::BackendRejected {
                status: None,
                message: format!("response is not a transcription object: {e}"),
            })?;
        Ok(RecognizedSpeech {
            text: parsed.text,
            language: parsed.language,
        })
    }
}
