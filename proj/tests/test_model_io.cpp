#include "fgk/model_io.hpp"
#include "fgk/synth.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <filesystem>

using namespace fgk;
using namespace fgk::testing;

namespace {

FlowModel tiny_model()
{
    BurstTemplate t;
    t.rise_duration_s = 0.4;
    auto flows = generate_group(t, 3, 8.0, 0.01, 5, 0);
    ChunkConfig ch;
    ch.chunk_length_s = 0.5;
    LearnOptions o;
    o.subspace_size = 60;
    return learn_flows(flows, {}, o, ch, scaled_windows(0.5, {1, 2, 3}), 20);
}

template <class A, class B>
bool bit_equal(const A& a, const B& b)
{
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(double)) == 0;
}

} // namespace

TEST_CASE("model round trip is bit exact")
{
    const FlowModel m = tiny_model();
    const std::string bytes = serialize_model(m);
    CHECK(bytes.substr(0, 5) == "FGKKF");
    const FlowModel b = deserialize_model(bytes);
    CHECK(bit_equal(m.core.X, b.core.X));
    CHECK(bit_equal(m.core.Y, b.core.Y));
    CHECK(bit_equal(m.core.Kbar, b.core.Kbar));
    CHECK(bit_equal(m.core.Kbar_prime, b.core.Kbar_prime));
    CHECK(bit_equal(m.core.G, b.core.G));
    CHECK(bit_equal(m.core.T, b.core.T));
    CHECK(bit_equal(m.core.O, b.core.O));
    CHECK(bit_equal(m.core.V, b.core.V));
    CHECK(bit_equal(m.core.n1, b.core.n1));
    CHECK(bit_equal(m.core.P1, b.core.P1));
    CHECK(bit_equal(m.core.GO, b.core.GO));
    CHECK(bit_equal(m.core.OGO, b.core.OGO));
    CHECK(bit_equal(m.core.XO, b.core.XO));
    CHECK(m.core.subspace_indices == b.core.subspace_indices);
    CHECK(m.core.hyper == b.core.hyper);
    CHECK(m.core.state_kernel.bandwidth == b.core.state_kernel.bandwidth);
    CHECK(m.core.obs_kernel.bandwidth == b.core.obs_kernel.bandwidth);
    CHECK(m.core.options.seed == b.core.options.seed);
    REQUIRE(m.prep.reducers.size() == b.prep.reducers.size());
    for (std::size_t i = 0; i < m.prep.reducers.size(); ++i) {
        CHECK(bit_equal(m.prep.reducers[i].basis.components, b.prep.reducers[i].basis.components));
        CHECK(bit_equal(m.prep.reducers[i].standardizer.means, b.prep.reducers[i].standardizer.means));
        CHECK(bit_equal(m.prep.reducers[i].standardizer.stds, b.prep.reducers[i].standardizer.stds));
    }
    CHECK(m.prep.windows.horizons_s == b.prep.windows.horizons_s);
    CHECK(serialize_model(b) == bytes);
}

TEST_CASE("model files")
{
    const auto dir = std::filesystem::temp_directory_path() / "fgk_model_io_test";
    std::filesystem::remove_all(dir);
    const std::string path = (dir / "sub" / "m.fgk").string();
    const FlowModel m = tiny_model();
    save_model(path, m);
    const FlowModel b = load_model(path);
    CHECK(serialize_model(b) == serialize_model(m));
    CHECK(error_code_of([&] { load_model((dir / "missing.fgk").string()); }) == Errc::MissingModel);
    CHECK(error_code_of([] { deserialize_model("garbage"); }) == Errc::ParseError);
    std::string bytes = serialize_model(m);
    bytes.resize(bytes.size() - 8);
    CHECK(error_code_of([&] { deserialize_model(bytes); }) == Errc::ParseError);
    std::filesystem::remove_all(dir);
}
