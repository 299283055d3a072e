#include "ifl/data/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "ifl/seed.hpp"

namespace ifl::data {

namespace {

constexpr Index kSide = 28;
constexpr int kNumSites = 5;            // fixed blob sites on a ring
constexpr double kSiteRadius = 7.5;
constexpr double kBlobSigma = 1.8;
constexpr double kCenterJitter = 0.6;   // per-axis center noise, pixels
constexpr double kPixelNoise = 0.03;    // additive Gaussian pixel noise
constexpr double kAmpLo = 0.85;         // blob amplitude range
constexpr double kAmpHi = 1.00;

struct Point {
    double x, y;
};

Point site_center(int site) {
    constexpr double mid = (kSide - 1) / 2.0;
    const double theta = 2.0 * std::numbers::pi * site / kNumSites;
    return {mid + kSiteRadius * std::cos(theta), mid + kSiteRadius * std::sin(theta)};
}

// Each class lights up a distinct pair of the five sites; C(5,2) = 10 covers
// the label set exactly. Classes therefore share spatial support, so features
// learned on any few classes transfer to the rest.
std::pair<int, int> class_sites(int cls) {
    int k = 0;
    for (int i = 0; i < kNumSites; ++i)
        for (int j = i + 1; j < kNumSites; ++j)
            if (k++ == cls) return {i, j};
    throw std::invalid_argument("class_sites: label out of range");
}

}  // namespace

Dataset make_synthetic(Index n, std::uint64_t seed, double label_flip) {
    if (label_flip < 0.0 || label_flip >= 1.0)
        throw std::invalid_argument("make_synthetic: label_flip must be in [0, 1)");
    std::mt19937_64 rng(mix64(seed));
    // Flip decisions live on their own stream so the images (and the clean
    // labels) are identical for a given seed whatever the flip rate.
    std::mt19937_64 flip_rng = make_rng(seed, {stream::label_flip});
    std::uniform_int_distribution<int> label_dist(0, kNumClasses - 1);
    std::normal_distribution<double> jitter(0.0, kCenterJitter);
    std::normal_distribution<double> pixel_noise(0.0, kPixelNoise);
    std::uniform_real_distribution<double> amplitude(kAmpLo, kAmpHi);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Dataset ds;
    ds.images = Tensor<float>::zeros({n, 1, kSide, kSide});
    ds.labels.resize(static_cast<std::size_t>(n));

    const double inv_two_sigma2 = 1.0 / (2.0 * kBlobSigma * kBlobSigma);
    for (Index s = 0; s < n; ++s) {
        const int cls = label_dist(rng);
        const auto [si, sj] = class_sites(cls);
        Point a = site_center(si);
        Point b = site_center(sj);
        a.x += jitter(rng);
        a.y += jitter(rng);
        b.x += jitter(rng);
        b.y += jitter(rng);
        const double amp_a = amplitude(rng);
        const double amp_b = amplitude(rng);

        float* img = ds.images.data.data() + s * kSide * kSide;
        for (Index y = 0; y < kSide; ++y) {
            for (Index x = 0; x < kSide; ++x) {
                const double da = (x - a.x) * (x - a.x) + (y - a.y) * (y - a.y);
                const double db = (x - b.x) * (x - b.x) + (y - b.y) * (y - b.y);
                const double v = amp_a * std::exp(-da * inv_two_sigma2) +
                                 amp_b * std::exp(-db * inv_two_sigma2) + pixel_noise(rng);
                img[y * kSide + x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }

        // Optional symmetric label noise, drawn from the flip stream only.
        int label = cls;
        if (label_flip > 0.0 && unit(flip_rng) < label_flip) {
            label = label_dist(flip_rng);
            if (label == cls) label = (label + 1) % kNumClasses;
        }
        ds.labels[static_cast<std::size_t>(s)] = label;
    }
    return ds;
}

}  // namespace ifl::data
