use std::sync::Arc;

use anyhow::Result;
use prefkit_service::{build_state, spawn_server, ProviderConfig, ServiceConfig};
use tracing::info;

use crate::ServeArgs;

fn service_config(args: &ServeArgs) -> ServiceConfig {
    let provider = match (&args.pool, &args.provider_url) {
        (Some(dir), _) => ProviderConfig::Pool(dir.clone()),
        (None, Some(url)) => ProviderConfig::Generator(url.clone()),
        (None, None) => unreachable!("argument parsing requires a provider"),
    };
    let mut config = ServiceConfig::new(provider, &args.log);
    config.bind = args.bind;
    config.interaction_limit = args.limit;
    config.rate_per_min = args.rate_per_min;
    config.nsfw_file = args.nsfw.clone();
    config.tokens = args
        .tokens
        .iter()
        .map(|t| t.trim().to_string())
        .filter(|t| !t.is_empty())
        .collect();
    config.tokens_file = args.tokens_file.clone();
    config.admin_token = args.admin_token.clone();
    config
}

pub fn run(args: &ServeArgs) -> Result<()> {
    let config = service_config(args);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let bind = config.bind;
        let state = Arc::new(build_state(config)?);
        let (addr, handle) = spawn_server(state, bind).await?;
        info!(%addr, "listening");
        println!("listening on http://{addr}");
        handle.await??;
        info!("shut down");
        Ok(())
    })
}
