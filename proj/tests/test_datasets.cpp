#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hesskron/datasets.hpp"
#include "hesskron/errors.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

using namespace hesskron;

namespace {

void put_be32(std::vector<unsigned char>& v, std::uint32_t x) {
    v.push_back((x >> 24) & 0xff);
    v.push_back((x >> 16) & 0xff);
    v.push_back((x >> 8) & 0xff);
    v.push_back(x & 0xff);
}

struct IdxFixture {
    std::filesystem::path dir;
    std::string images;
    std::string labels;
    std::vector<unsigned char> pixels;

    IdxFixture(std::size_t n, std::size_t rows, std::size_t cols,
               const std::vector<unsigned char>& labs, bool gz = false) {
        dir = std::filesystem::temp_directory_path() / "hesskron_idx_test";
        std::filesystem::create_directories(dir);
        std::vector<unsigned char> img;
        put_be32(img, 0x00000803u);
        put_be32(img, static_cast<std::uint32_t>(n));
        put_be32(img, static_cast<std::uint32_t>(rows));
        put_be32(img, static_cast<std::uint32_t>(cols));
        for (std::size_t i = 0; i < n * rows * cols; ++i)
            pixels.push_back(static_cast<unsigned char>((i * 7 + 13) % 256));
        img.insert(img.end(), pixels.begin(), pixels.end());

        std::vector<unsigned char> lab;
        put_be32(lab, 0x00000801u);
        put_be32(lab, static_cast<std::uint32_t>(labs.size()));
        lab.insert(lab.end(), labs.begin(), labs.end());

        images = (dir / (gz ? "imgs.idx.gz" : "imgs.idx")).string();
        labels = (dir / (gz ? "labs.idx.gz" : "labs.idx")).string();
        write(images, img, gz);
        write(labels, lab, gz);
    }

    static void write(const std::string& path, const std::vector<unsigned char>& bytes,
                      bool gz) {
        if (gz) {
            gzFile f = gzopen(path.c_str(), "wb");
            REQUIRE(f != nullptr);
            gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
            gzclose(f);
        } else {
            std::ofstream f(path, std::ios::binary);
            f.write(reinterpret_cast<const char*>(bytes.data()),
                    static_cast<std::streamsize>(bytes.size()));
        }
    }
};

} // namespace

TEST_CASE("load_idx round-trips a hand-built fixture") {
    IdxFixture fx(2, 3, 4, {1, 0});
    Dataset d = load_idx(fx.images, fx.labels);
    CHECK(d.size() == 2);
    CHECK(d.dim() == 12);
    CHECK(d.labels[0] == 1);
    CHECK(d.labels[1] == 0);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 12; ++j)
            CHECK(d.inputs(i, j) ==
                  doctest::Approx(fx.pixels[i * 12 + j] / 255.0).epsilon(1e-15));
    // lossless up to the fixed 1/255 scaling: recover the original bytes
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 12; ++j)
            CHECK(static_cast<unsigned char>(std::lround(d.inputs(i, j) * 255.0)) ==
                  fx.pixels[i * 12 + j]);
}

TEST_CASE("load_idx handles gzip files") {
    IdxFixture fx(3, 2, 2, {2, 5, 9}, /*gz=*/true);
    Dataset d = load_idx(fx.images, fx.labels);
    CHECK(d.size() == 3);
    CHECK(d.dim() == 4);
    CHECK(d.labels[2] == 9);
}

TEST_CASE("load_idx rejects bad magic and count mismatch") {
    IdxFixture fx(2, 3, 4, {1, 0});
    CHECK_THROWS_AS(load_idx(fx.labels, fx.labels), format_error); // wrong magic
    IdxFixture mismatched(2, 3, 4, {1, 0, 3});                     // 2 images, 3 labels
    CHECK_THROWS_AS(load_idx(mismatched.images, mismatched.labels), format_error);
    CHECK_THROWS_AS(load_idx("/nonexistent/file", fx.labels), io_error);
}

TEST_CASE("relabel_mnist2 maps label ranges") {
    Dataset d = gaussian_synthetic(20, 4, 10, 7);
    d.labels[0] = 3;
    d.labels[1] = 7;
    Dataset two = relabel_mnist2(d);
    CHECK(two.labels[0] == 0);
    CHECK(two.labels[1] == 1);
    CHECK(two.num_classes == 2);
    // inputs untouched
    for (std::size_t i = 0; i < d.inputs.size(); ++i)
        CHECK(two.inputs.data()[i] == d.inputs.data()[i]);
    // histogram has exactly 2 bins summing to N
    std::size_t h[2] = {0, 0};
    for (std::size_t l : two.labels) ++h[l];
    CHECK(h[0] + h[1] == two.size());

    Dataset all_zero = d;
    for (auto& l : all_zero.labels) l = 0;
    Dataset z = relabel_mnist2(all_zero);
    for (std::size_t l : z.labels) CHECK(l == 0);

    Dataset wrong = gaussian_synthetic(5, 3, 4, 9);
    CHECK_THROWS_AS(relabel_mnist2(wrong), precondition_error);
}

TEST_CASE("randomize_labels determinism and balance") {
    Dataset d = gaussian_synthetic(100000, 2, 10, 3);
    Dataset r1 = randomize_labels(d, 42);
    Dataset r2 = randomize_labels(d, 42);
    CHECK(r1.labels == r2.labels);
    // inputs bitwise unchanged
    CHECK(r1.inputs.data() == d.inputs.data());
    // each class frequency within 3 sigma of N/c
    const double n = 100000, c = 10;
    const double sigma = std::sqrt(n * (1.0 / c) * (1.0 - 1.0 / c));
    std::vector<std::size_t> hist(10, 0);
    for (std::size_t l : r1.labels) ++hist[l];
    for (std::size_t k = 0; k < 10; ++k)
        CHECK(std::abs(static_cast<double>(hist[k]) - n / c) <= 3.0 * sigma);
}

TEST_CASE("gaussian_synthetic moments and determinism") {
    Dataset d = gaussian_synthetic(10000, 6, 3, 11);
    for (std::size_t j = 0; j < 6; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) mean += d.inputs(i, j);
        mean /= static_cast<double>(d.size());
        CHECK(std::abs(mean) <= 4.0 / std::sqrt(10000.0));
        double var = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            const double z = d.inputs(i, j) - mean;
            var += z * z;
        }
        var /= static_cast<double>(d.size());
        CHECK(std::abs(var - 1.0) <= 0.1);
    }
    Dataset again = gaussian_synthetic(10000, 6, 3, 11);
    CHECK(again.inputs.data() == d.inputs.data());
    CHECK(again.labels == d.labels);
}

TEST_CASE("subset behavior") {
    Dataset d = gaussian_synthetic(100, 3, 4, 5);
    Dataset full = subset(d, 100, 17);
    // permutation of the original: same multiset of (row, label) pairs
    double sum_d = 0.0, sum_f = 0.0;
    for (double x : d.inputs.data()) sum_d += x;
    for (double x : full.inputs.data()) sum_f += x;
    CHECK(sum_f == doctest::Approx(sum_d).epsilon(1e-12));

    Dataset one = subset(d, 1, 3);
    CHECK(one.size() == 1);
    one.validate();

    Dataset s1 = subset(d, 10, 1);
    Dataset s2 = subset(d, 10, 2);
    CHECK(s1.inputs.data() != s2.inputs.data());

    CHECK_THROWS_AS(subset(d, 101, 0), precondition_error);
}
