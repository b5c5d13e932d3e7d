#[path = "../../server/tests/common/mod.rs"]
mod common;

use std::sync::Arc;

use napkit_client::{ClientError, NapClient};
use napkit_core::{NapError, NapFilter};
use napkit_server::{app, Store};

/// Serve `dir` on an ephemeral port for the rest of the test.
async fn spawn(dir: &std::path::Path) -> NapClient {
    let store = Arc::new(Store::open(dir).unwrap());
    let listener = napkit_server::bind("127.0.0.1:0".parse().unwrap())
        .await
        .unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(napkit_server::serve(listener, app(store, None)));
    NapClient::new(&format!("http://{addr}")).unwrap()
}

#[tokio::test]
async fn typed_calls_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let run = common::export_toy(dir.path(), "toy", 200);
    let client = spawn(dir.path()).await;

    assert_eq!(client.models().await.unwrap(), vec![run.manifest()]);
    assert_eq!(client.layers("toy").await.unwrap(), run.manifest().layers);

    for (set, _) in &run.layers {
        let got = client
            .naps("toy", &set.layer_id, &NapFilter::default())
            .await
            .unwrap();
        assert_eq!(&got, set);
        for nap in &set.naps {
            assert_eq!(&client.nap(&nap.nap_id).await.unwrap(), nap);
        }
    }

    let filter = NapFilter {
        label: Some("vertical-blue".into()),
        prediction: None,
        mispredicted: true,
    };
    let dense = &run.layers[1].0;
    let got = client.naps("toy", "dense", &filter).await.unwrap();
    assert!(!got.naps.is_empty());
    assert_eq!(got, dense.filter(&filter, &run.metadata));

    let id = dense.naps[0].member_sample_ids[0];
    let trace = client.trace(id, None).await.unwrap();
    assert_eq!(trace.sample_id, id);
    assert_eq!(trace.metadata.as_ref(), run.metadata.get(id));
    assert_eq!(client.trace(id, Some("toy")).await.unwrap(), trace);

    assert_eq!(
        client.asset("7.png", None).await.unwrap(),
        common::fake_png(7)
    );
}

#[tokio::test]
async fn server_errors_keep_their_class() {
    let dir = tempfile::tempdir().unwrap();
    common::export_toy(dir.path(), "toy", 60);
    let client = spawn(dir.path()).await;

    let err = client.layers("missing").await.unwrap_err();
    assert!(
        matches!(&err, ClientError::Api { status: 404, class, .. } if class == "LookupError"),
        "{err}"
    );
    assert!(matches!(NapError::from(err), NapError::Lookup(_)));

    let err = client.asset("../manifest.json", None).await.unwrap_err();
    assert!(matches!(NapError::from(err), NapError::Param(_)));

    let err = client.nap("toy/dense/12345").await.unwrap_err();
    assert!(matches!(NapError::from(err), NapError::Lookup(_)));
}

#[tokio::test]
async fn unreachable_server_is_an_io_error() {
    // Grab a free port, then close it.
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let client = NapClient::new(&format!("http://127.0.0.1:{port}/")).unwrap();
    let err = NapError::from(client.models().await.unwrap_err());
    assert_eq!(err.class(), "IoError");
}

#[test]
fn urls_are_built_under_the_base_path() {
    let client = NapClient::new("http://example.test/napkit").unwrap();
    assert_eq!(client.base().as_str(), "http://example.test/napkit/");
    assert!(matches!(
        NapClient::new("not a url"),
        Err(ClientError::BadUrl(_))
    ));
}
