#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>

#include "dinnlab/dataset.hpp"
#include "dinnlab/error.hpp"

using namespace dinnlab;
namespace fs = std::filesystem;

namespace {

std::string write_real(const std::string& name, int rows, bool swap = false) {
    const auto path = (fs::temp_directory_path() / name).string();
    std::ofstream os(path);
    os << "date,S,I,D,R\n";
    for (int i = 0; i < rows; ++i) {
        const int d = swap && i == 5 ? 4 : i;
        const std::chrono::sys_days day = std::chrono::year{2020} / std::chrono::March / 1;
        const std::chrono::year_month_day ymd{day + std::chrono::days{d}};
        char buf[32];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
        os << buf << ',' << 1000 - i << ',' << 10 + i << ',' << i / 10 << ',' << i << '\n';
    }
    return path;
}

} // namespace

TEST_CASE("noise-free synthesis equals the integrator") {
    const auto& m = registry_get("covid_sird");
    const auto p = m.true_values();
    const auto ds = synthesize(m, p, m.default_y0, 50, 100.0, {});
    const auto tr = integrate(m, p, m.default_y0, uniform_grid(0.0, 100.0, 50));
    CHECK(ds.observations == tr.states);
    CHECK(ds.times == tr.times);
    CHECK(ds.scale[0] == 990.0);
}

TEST_CASE("noise is reproducible from the seed") {
    const auto& m = registry_get("covid_sird");
    const auto p = m.true_values();
    const NoiseSpec n{0.2, 42, NoiseModel::Multiplicative};
    const auto a = synthesize(m, p, m.default_y0, 40, 100.0, n);
    const auto b = synthesize(m, p, m.default_y0, 40, 100.0, n);
    CHECK(a.observations == b.observations);
    const auto c = synthesize(m, p, m.default_y0, 40, 100.0, {0.2, 43, NoiseModel::Multiplicative});
    CHECK(a.observations != c.observations);
}

TEST_CASE("multiplicative noise has the requested spread") {
    const auto& m = registry_get("sir");
    // beta = alpha = 0 leaves every compartment constant
    const std::vector<double> p{0.0, 0.0}, y0{500.0, 10.0, 0.0};
    const auto ds = synthesize(m, p, y0, 10000, 10.0, {0.10, 7, NoiseModel::Multiplicative});
    double sum = 0.0, sq = 0.0;
    for (const auto& row : ds.observations) sum += row[0];
    const double mean = sum / 10000.0;
    for (const auto& row : ds.observations) sq += (row[0] - mean) * (row[0] - mean);
    const double ratio = std::sqrt(sq / 9999.0) / mean;
    CHECK(ratio > 0.095);
    CHECK(ratio < 0.105);
}

TEST_CASE("masking") {
    const auto& m = registry_get("covid_sird");
    const auto ds = synthesize(m, m.true_values(), m.default_y0, 20, 100.0, {});
    const auto same = mask_compartments(ds, {});
    CHECK(same.mask == ds.mask);
    const auto h = mask_compartments(ds, {"R"});
    CHECK_FALSE(h.mask[3]);
    CHECK(h.init_only[3]);
    CHECK(h.hidden() == std::vector<std::string>{"R"});
    CHECK(h.observed_count() == 20 * 3 + 1);
    const auto& tb = registry_get("tuberculosis");
    const auto t = synthesize(tb, tb.true_values(), tb.default_y0, 10, tb.horizon, {});
    const auto th = mask_compartments(t, {"L", "I"});
    int n = 0;
    for (std::size_t c = 0; c < th.dim(); ++c) n += th.init_only[c] ? 1 : 0;
    CHECK(n == 2);
    CHECK_THROWS_AS(mask_compartments(ds, {"Q"}), Error);
}

TEST_CASE("real data ingestion splits train and holdout") {
    const auto path = write_real("dinnlab_real310.csv", 310);
    const auto split = ingest_real_csv(path, 10, 280);
    CHECK(split.train.size() == 29);
    CHECK(split.train.times.front() == 0.0);
    CHECK(split.train.times.back() == 280.0);
    CHECK(split.holdout.size() == 29);
    CHECK(split.holdout.times.front() == 281.0);
    CHECK(split.first_date == "2020-03-01");
    const auto all = ingest_real_csv(path, 10, 1000);
    CHECK(all.holdout.size() == 0);
    fs::remove(path);
    const auto path311 = write_real("dinnlab_real311.csv", 311);
    const auto s311 = ingest_real_csv(path311, 10, 280);
    CHECK(s311.train.size() == 29);
    CHECK(s311.holdout.size() == 30);
    fs::remove(path311);
}

TEST_CASE("real data errors") {
    auto kind_of = [](const std::string& p) {
        try {
            ingest_real_csv(p, 10, 280);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::Io;
    };
    CHECK(kind_of("/nonexistent/file.csv") == ErrorKind::Ingestion);
    const auto one = write_real("dinnlab_real1.csv", 1);
    CHECK(kind_of(one) == ErrorKind::Ingestion);
    const auto swapped = write_real("dinnlab_realsw.csv", 20, true);
    CHECK(kind_of(swapped) == ErrorKind::Ordering);
    const auto bad = (fs::temp_directory_path() / "dinnlab_realbad.csv").string();
    std::ofstream(bad) << "date,S,I,D,R\n2020-03-01,1,2,3,4\n2020-03-02,x,2,3,4\n";
    try {
        ingest_real_csv(bad, 10, 280);
        FAIL("expected failure");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Ingestion);
        CHECK(std::string(e.what()).find('3') != std::string::npos);
    }
    fs::remove(one);
    fs::remove(swapped);
    fs::remove(bad);
}

TEST_CASE("dataset CSV and sidecar round trip") {
    const auto& m = registry_get("covid_sird");
    auto ds = synthesize(m, m.true_values(), m.default_y0, 15, 100.0, {0.05, 1, NoiseModel::Additive});
    ds = mask_compartments(ds, {"R"});
    const auto path = (fs::temp_directory_path() / "dinnlab_ds_rt.csv").string();
    write_dataset_csv(path, ds);
    const auto back = apply_sidecar(read_dataset_csv(path, m.name), mask_sidecar(ds));
    fs::remove(path);
    CHECK(back.times == ds.times);
    CHECK(back.mask == ds.mask);
    CHECK(back.init_only == ds.init_only);
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t c = 0; c < 3; ++c) CHECK(back.observations[i][c] == ds.observations[i][c]);
}
