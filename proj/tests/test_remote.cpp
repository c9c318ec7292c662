#include <chrono>

#include <doctest.h>

#include "ctrank/embedder.hpp"
#include "ctrank/error.hpp"
#include "stub_server.hpp"

using namespace ctrank;
using namespace std::chrono_literals;

namespace {

EmbedderConfig remote_config(const std::string& url, std::size_t dim) {
    EmbedderConfig cfg;
    cfg.backend = Backend::remote;
    cfg.dim = dim;
    cfg.remote_url = url;
    return cfg;
}

RemoteOptions fast() {
    RemoteOptions o;
    o.initial_backoff = 10ms;
    o.timeout = 5s;
    return o;
}

std::vector<TextItem> items(std::size_t n) {
    std::vector<TextItem> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({"id" + std::to_string(i), "t" + std::to_string(i)});
    }
    return out;
}

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no error thrown");
    return ErrorKind::Io;
}

}  // namespace

TEST_CASE("remote embedding against a local stub") {
    stub::EmbeddingServer server(8);
    const auto cfg = remote_config(server.url(), 8);

    SUBCASE("order is preserved within a batch") {
        const auto batch = items(10);
        const auto vecs = embed_remote(batch, cfg, fast());
        REQUIRE(vecs.size() == 10);
        for (std::size_t i = 0; i < vecs.size(); ++i) {
            CHECK(vecs[i].source_id == batch[i].id);
            CHECK(vecs[i].values[0] == static_cast<float>(i));
            CHECK(vecs[i].dim() == 8);
        }
    }
    SUBCASE("order is preserved across concurrent batches") {
        const auto all = items(200);
        const auto vecs = embed_remote_all(all, cfg, fast());
        REQUIRE(vecs.size() == 200);
        for (std::size_t i = 0; i < vecs.size(); ++i) {
            CHECK(vecs[i].source_id == all[i].id);
            CHECK(vecs[i].values[0] == static_cast<float>(i));
        }
        auto sizes = server.batch_sizes();
        std::sort(sizes.begin(), sizes.end());
        CHECK(sizes == std::vector<std::size_t>{8, 64, 64, 64});
    }
    SUBCASE("empty batch makes no request") {
        CHECK(embed_remote(std::span<const TextItem>(), cfg, fast()).empty());
        CHECK(server.requests() == 0);
    }
    SUBCASE("declared dim differs from config") {
        server.set_mode(stub::Mode::wrong_dim);
        CHECK(kind_of([&] { embed_remote(items(2), cfg, fast()); }) == ErrorKind::DimMismatch);
    }
    SUBCASE("vector length differs from config") {
        server.set_mode(stub::Mode::short_vector);
        CHECK(kind_of([&] { embed_remote(items(2), cfg, fast()); }) == ErrorKind::DimMismatch);
    }
    SUBCASE("transient 5xx is retried with growing backoff") {
        server.set_mode(stub::Mode::fail_then_ok, 3);
        RemoteOptions o = fast();
        o.initial_backoff = 40ms;
        const auto start = std::chrono::steady_clock::now();
        const auto vecs = embed_remote(items(3), cfg, o);
        const auto waited = std::chrono::steady_clock::now() - start;
        CHECK(vecs.size() == 3);
        CHECK(server.requests() == 4);
        CHECK(waited >= 40ms + 80ms + 160ms);
    }
    SUBCASE("persistent 5xx gives up after three retries") {
        server.set_mode(stub::Mode::always_503);
        CHECK(kind_of([&] { embed_remote(items(1), cfg, fast()); }) == ErrorKind::RemoteUnavailable);
        CHECK(server.requests() == 4);
    }
    SUBCASE("4xx fails without retry") {
        server.set_mode(stub::Mode::bad_request);
        CHECK(kind_of([&] { embed_remote(items(1), cfg, fast()); }) == ErrorKind::RemoteUnavailable);
        CHECK(server.requests() == 1);
    }
    SUBCASE("non-JSON body") {
        server.set_mode(stub::Mode::garbage);
        CHECK(kind_of([&] { embed_remote(items(1), cfg, fast()); }) == ErrorKind::MalformedResponse);
    }
    SUBCASE("oversized batch is rejected locally") {
        CHECK(kind_of([&] { embed_remote(items(kMaxRemoteBatch + 1), cfg, fast()); }) == ErrorKind::InvalidConfig);
    }
}

TEST_CASE("server down") {
    std::string url;
    {
        stub::EmbeddingServer server(4);
        url = server.url();
    }
    RemoteOptions o = fast();
    o.initial_backoff = 1ms;
    CHECK(kind_of([&] { embed_remote(items(1), remote_config(url, 4), o); }) == ErrorKind::RemoteUnavailable);
}
