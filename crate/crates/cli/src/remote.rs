use std::io::Write;

use napkit_client::NapClient;
use napkit_core::{NapError, NapFilter, Result};
use serde::Serialize;

use crate::args::{RemoteArgs, RemoteQuery};
use crate::commands::runtime;

fn print<T: Serialize>(value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("API types serialize");
    text.push('\n');
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        // A closed pipe (e.g. `| head`) is not a failure.
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(NapError::io("stdout", e)),
        _ => Ok(()),
    }
}

pub fn remote_cmd(args: RemoteArgs) -> Result<()> {
    let client = NapClient::new(&args.server)?;
    runtime()?.block_on(async move {
        match args.query {
            RemoteQuery::Models => print(&client.models().await?),
            RemoteQuery::Layers { model } => print(&client.layers(&model).await?),
            RemoteQuery::Naps {
                model,
                layer,
                label,
                prediction,
                mispredicted,
            } => {
                let filter = NapFilter {
                    label,
                    prediction,
                    mispredicted,
                };
                print(&client.naps(&model, &layer, &filter).await?)
            }
            RemoteQuery::Nap { nap_id } => print(&client.nap(&nap_id).await?),
            RemoteQuery::Trace { sample_id, model } => {
                print(&client.trace(sample_id, model.as_deref()).await?)
            }
            RemoteQuery::Asset {
                image_ref,
                model,
                out,
            } => {
                let bytes = client.asset(&image_ref, model.as_deref()).await?;
                std::fs::write(&out, bytes).map_err(|e| NapError::io(out.display().to_string(), e))
            }
        }
    })
}
