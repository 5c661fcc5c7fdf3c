use std::time::Duration;

use async_trait::async_trait;
use serde::Deserialize;

use super::{ChatCompletion, ChatReply, ChatRequest, ReportedUsage, SummarizerBackendDescriptor, SummarizerError};
use crate::http::{bearer_token, build_client, send_with_retry, NetworkOptions, RetryPolicy};

/// JSON chat-completion client (`choices[0].message.content`, optional `usage`).
#[derive(Debug)]
pub struct RemoteChat {
    client: reqwest::Client,
    endpoint_url: String,
    token_env: Option<String>,
    retry: RetryPolicy,
}

#[derive(Debug, Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<ReportedUsage>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Debug, Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

impl RemoteChat {
    pub fn new(descriptor: &SummarizerBackendDescriptor, network: &NetworkOptions) -> Result<Self, SummarizerError> {
        let client =
            build_client(Duration::from_secs_f64(descriptor.timeout_s), network).map_err(SummarizerError::Config)?;
        Ok(Self {
            client,
            endpoint_url: descriptor.endpoint_url.clone(),
            token_env: descriptor.api_key_env.clone(),
            retry: RetryPolicy::with_max_retries(descriptor.max_retries),
        })
    }
}

#[async_trait]
impl ChatCompletion for RemoteChat {
    async fn complete(&self, request: &ChatRequest) -> Result<ChatReply, SummarizerError> {
        let token = bearer_token(self.token_env.as_deref());
        let body = send_with_retry(self.retry, || {
            let mut builder = self.client.post(&self.endpoint_url).json(request);
            if let Some(token) = &token {
                builder = builder.bearer_auth(token);
            }
            builder
        })
        .await?;

        let parsed: CompletionResponse = serde_json::from_str(&body).map_err(|e| SummarizerError::BackendRejected {
            status: None,
            message: format!("response is not a chat completion: {e}"),
        })?;
        let content = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .unwrap_or_default();
        Ok(ChatReply {
            content,
            usage: parsed.usage,
        })
    }
}
