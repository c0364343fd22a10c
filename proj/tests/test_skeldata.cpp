#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <set>

#include "skelrob/checkpoint.hpp"
#include "skelrob/skeldata.hpp"

using namespace skelrob;
using data::GaitSubjectParams;
using data::SkeletonDataset;
using num::Tensor;

namespace {

std::vector<GaitSubjectParams> quiet_params(int n, double leg_amp, double arm_amp) {
    auto params = data::default_subject_params(n, 1);
    for (auto& p : params) {
        p.joint_noise_stdev = 0.0;
        p.occlusion_rate = 0.0;
        p.null_frame_rate = 0.0;
        p.leg_swing_amplitude = leg_amp;
        p.arm_swing_amplitude = arm_amp;
    }
    return params;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

Tensor rotate_y(const Tensor& video, double angle) {
    Tensor out = video;
    int T = video.shape[1];
    double c = std::cos(angle), s = std::sin(angle);
    for (int t = 0; t < T; ++t)
        for (int q = 0; q < data::kJoints; ++q) {
            double x = video.data[static_cast<size_t>((0 * T + t) * data::kJoints + q)];
            double z = video.data[static_cast<size_t>((2 * T + t) * data::kJoints + q)];
            out.data[static_cast<size_t>((0 * T + t) * data::kJoints + q)] = c * x + s * z;
            out.data[static_cast<size_t>((2 * T + t) * data::kJoints + q)] = -s * x + c * z;
        }
    return out;
}

} // namespace

TEST_CASE("zero dynamics give a static pose") {
    auto params = quiet_params(2, 0.0, 0.0);
    auto videos = data::synthesize_gait_dataset(2, 1, 12, params, 7);
    REQUIRE(videos.size() == 2);
    for (const auto& v : videos) {
        int T = v.frames.shape[1];
        for (int t = 1; t < T; ++t)
            for (int a = 0; a < 3; ++a)
                for (int q = 0; q < data::kJoints; ++q)
                    CHECK(v.frames.data[static_cast<size_t>((a * T + t) * data::kJoints + q)] ==
                          doctest::Approx(v.frames.data[static_cast<size_t>(
                                              (a * T + 0) * data::kJoints + q)])
                              .epsilon(1e-12));
    }
}

TEST_CASE("trajectories are periodic with period 1/stride_frequency") {
    auto params = quiet_params(2, 0.5, 0.4);
    for (auto& p : params) p.stride_frequency = 0.125; // period 8 frames
    auto videos = data::synthesize_gait_dataset(2, 1, 20, params, 3);
    for (const auto& v : videos) {
        int T = v.frames.shape[1];
        double worst = 0.0;
        for (int t = 0; t + 8 < T; ++t)
            for (int a = 0; a < 3; ++a)
                for (int q = 0; q < data::kJoints; ++q) {
                    double d = std::fabs(
                        v.frames.data[static_cast<size_t>((a * T + t) * data::kJoints + q)] -
                        v.frames.data[static_cast<size_t>((a * T + t + 8) * data::kJoints + q)]);
                    worst = std::max(worst, d);
                }
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("synthesizer is deterministic and rejects bad dimensions") {
    auto params = data::default_subject_params(3, 5);
    auto a = data::synthesize_gait_dataset(3, 2, 9, params, 11);
    auto b = data::synthesize_gait_dataset(3, 2, 9, params, 11);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].frames.data == b[i].frames.data);
    CHECK_THROWS_AS(data::synthesize_gait_dataset(1, 2, 9, params, 1), Error);
    CHECK_THROWS_AS(data::synthesize_gait_dataset(3, 0, 9, params, 1), Error);
    CHECK_THROWS_AS(data::synthesize_gait_dataset(3, 2, 2, params, 1), Error);
}

TEST_CASE("subject parameter sets are pairwise distinct") {
    auto params = data::default_subject_params(9, 1);
    for (size_t i = 0; i < params.size(); ++i)
        for (size_t j = i + 1; j < params.size(); ++j) {
            bool differs = params[i].stride_frequency != params[j].stride_frequency ||
                           params[i].phase_offset != params[j].phase_offset ||
                           params[i].limb_lengths != params[j].limb_lengths;
            CHECK(differs);
        }
}

TEST_CASE("preprocess properties") {
    auto params = quiet_params(2, 0.5, 0.4);
    auto videos = data::synthesize_gait_dataset(2, 1, 9, params, 13);
    const Tensor& raw = videos[0].frames;

    SUBCASE("fixed point: preprocessed video passes through unchanged") {
        auto once = data::preprocess(raw);
        auto twice = data::preprocess(once.video);
        CHECK(max_abs_diff(once.video.data, twice.video.data) < 1e-9);
    }

    SUBCASE("translation invariance") {
        Tensor shifted = raw;
        int T = raw.shape[1];
        for (int t = 0; t < T; ++t)
            for (int q = 0; q < data::kJoints; ++q)
                shifted.data[static_cast<size_t>((0 * T + t) * data::kJoints + q)] += 5.0;
        auto a = data::preprocess(raw);
        auto b = data::preprocess(shifted);
        CHECK(max_abs_diff(a.video.data, b.video.data) < 1e-9);
    }

    SUBCASE("rotation invariance at 90 degrees") {
        auto a = data::preprocess(raw);
        auto b = data::preprocess(rotate_y(raw, M_PI / 2.0));
        CHECK(max_abs_diff(a.video.data, b.video.data) < 1e-9);
        auto c = data::preprocess(rotate_y(raw, M_PI)); // the 180-degree ambiguity
        CHECK(max_abs_diff(a.video.data, c.video.data) < 1e-9);
    }

    SUBCASE("per-frame centroid is at the origin and coordinates bounded") {
        auto res = data::preprocess(raw);
        int T = res.video.shape[1];
        for (int t = 0; t < T; ++t)
            for (int a = 0; a < 3; ++a) {
                double c = 0.0;
                for (int q = 0; q < data::kJoints; ++q)
                    c += res.video.data[static_cast<size_t>((a * T + t) * data::kJoints + q)];
                CHECK(std::fabs(c / data::kJoints) < 1e-9);
            }
        for (double v : res.video.data) CHECK(std::fabs(v) <= 1.0);
    }

    SUBCASE("oversized video is scaled by one global factor") {
        Tensor big = raw;
        for (double& v : big.data) v *= 10.0;
        auto res = data::preprocess(big);
        double maxabs = 0.0;
        for (double v : res.video.data) maxabs = std::max(maxabs, std::fabs(v));
        CHECK(maxabs <= 1.0);
        CHECK(maxabs > 0.99); // scale factor normalizes the max to 1
    }

    SUBCASE("degenerate frame is flagged and left unrotated") {
        Tensor degen = raw;
        int T = raw.shape[1];
        for (int a = 0; a < 3; ++a)
            for (int q = 0; q < data::kJoints; ++q)
                degen.data[static_cast<size_t>((a * T + 1) * data::kJoints + q)] = 0.0;
        auto res = data::preprocess(degen);
        REQUIRE(res.degenerate_frames.size() == 1);
        CHECK(res.degenerate_frames[0] == 1);
    }
}

TEST_CASE("segment windowing") {
    Tensor video({3, 10, data::kJoints});
    for (size_t i = 0; i < video.data.size(); ++i) video.data[i] = static_cast<double>(i);

    SUBCASE("exact division") {
        Tensor nine({3, 9, data::kJoints});
        int T = 9;
        for (int a = 0; a < 3; ++a)
            for (int t = 0; t < T; ++t)
                for (int q = 0; q < data::kJoints; ++q)
                    nine.data[static_cast<size_t>((a * T + t) * data::kJoints + q)] =
                        video.data[static_cast<size_t>((a * 10 + t) * data::kJoints + q)];
        auto w = data::segment(nine, 3);
        REQUIRE(w.size() == 3);
        // windows cover frames [0-2],[3-5],[6-8]
        for (int q = 0; q < data::kJoints; ++q)
            CHECK(w[1].data[static_cast<size_t>(q)] ==
                  nine.data[static_cast<size_t>((0 * 9 + 3) * data::kJoints + q)]);
    }

    SUBCASE("remainder dropped") {
        auto w = data::segment(video, 3);
        CHECK(w.size() == 3);
    }

    SUBCASE("identity window") {
        Tensor three({3, 3, data::kJoints});
        for (size_t i = 0; i < three.data.size(); ++i) three.data[i] = 0.25 * static_cast<double>(i % 7);
        auto w = data::segment(three, 3);
        REQUIRE(w.size() == 1);
        CHECK(w[0].data == three.data);
    }

    SUBCASE("segment then concatenate reproduces the leading frames") {
        auto w = data::segment(video, 3);
        for (int wi = 0; wi < 3; ++wi)
            for (int a = 0; a < 3; ++a)
                for (int t = 0; t < 3; ++t)
                    for (int q = 0; q < data::kJoints; ++q)
                        CHECK(w[static_cast<size_t>(wi)]
                                  .data[static_cast<size_t>((a * 3 + t) * data::kJoints + q)] ==
                              video.data[static_cast<size_t>((a * 10 + wi * 3 + t) *
                                                             data::kJoints + q)]);
    }

    SUBCASE("too-short video is an error") {
        Tensor tiny({3, 2, data::kJoints});
        CHECK_THROWS_AS(data::segment(tiny, 3), Error);
    }
}

TEST_CASE("standard corpus invariants") {
    SkeletonDataset d = data::make_standard_corpus(3, 20, 99);
    CHECK(d.n() == 60);
    CHECK(d.num_classes == 3);
    d.validate();
    auto hist = d.class_histogram();
    for (int h : hist) CHECK(h == 20);
    SkeletonDataset d2 = data::make_standard_corpus(3, 20, 99);
    CHECK(d.samples.data == d2.samples.data);
}

TEST_CASE("stratified k-fold") {
    SUBCASE("90 samples, 9 classes, 10 folds: one per class per fold") {
        SkeletonDataset d;
        d.num_classes = 9;
        d.samples = Tensor({90, 3, 3, data::kJoints});
        for (int i = 0; i < 90; ++i) d.labels.push_back(i % 9);
        auto split = data::stratified_kfold(d, 10, 5);
        for (int f = 0; f < 10; ++f) {
            auto idx = split.fold_indices(f);
            CHECK(idx.size() == 9);
            std::set<int> classes;
            for (int i : idx) classes.insert(d.labels[static_cast<size_t>(i)]);
            CHECK(classes.size() == 9);
        }
    }

    SUBCASE("determinism") {
        SkeletonDataset d;
        d.num_classes = 3;
        d.samples = Tensor({60, 3, 3, data::kJoints});
        for (int i = 0; i < 60; ++i) d.labels.push_back(i % 3);
        auto a = data::stratified_kfold(d, 5, 42);
        auto b = data::stratified_kfold(d, 5, 42);
        CHECK(a.assignments == b.assignments);
        auto c = data::stratified_kfold(d, 5, 43);
        CHECK(a.assignments != c.assignments);
    }

    SUBCASE("1800 samples, 9 classes: 180 per fold, 20 per class") {
        SkeletonDataset d;
        d.num_classes = 9;
        d.samples = Tensor({1800, 3, 3, data::kJoints});
        for (int i = 0; i < 1800; ++i) d.labels.push_back(i % 9);
        auto split = data::stratified_kfold(d, 10, 1);
        for (int f = 0; f < 10; ++f) {
            auto idx = split.fold_indices(f);
            CHECK(idx.size() == 180);
            std::vector<int> per_class(9, 0);
            for (int i : idx) per_class[static_cast<size_t>(d.labels[static_cast<size_t>(i)])]++;
            for (int c : per_class) CHECK(c == 20);
        }
    }

    SUBCASE("folds partition the index set") {
        SkeletonDataset d;
        d.num_classes = 4;
        d.samples = Tensor({41, 3, 3, data::kJoints});
        for (int i = 0; i < 41; ++i) d.labels.push_back(i % 4);
        auto split = data::stratified_kfold(d, 5, 9);
        std::set<int> all;
        for (int f = 0; f < 5; ++f)
            for (int i : split.fold_indices(f)) CHECK(all.insert(i).second);
        CHECK(all.size() == 41);
        for (int f = 0; f < 5; ++f) {
            std::set<int> classes;
            for (int i : split.fold_indices(f))
                classes.insert(d.labels[static_cast<size_t>(i)]);
            CHECK(classes.size() == 4);
        }
    }

    SUBCASE("class smaller than fold count is an error") {
        SkeletonDataset d;
        d.num_classes = 2;
        d.samples = Tensor({6, 3, 3, data::kJoints});
        d.labels = {0, 0, 0, 0, 0, 1};
        CHECK_THROWS_AS(data::stratified_kfold(d, 5, 1), Error);
    }
}

TEST_CASE("dataset file round trip and error cases") {
    SkeletonDataset d = data::make_standard_corpus(2, 5, 3);
    const char* path = "skl_test.skl";

    SUBCASE("round trip is exact at 32-bit precision") {
        data::write_dataset(d, path);
        SkeletonDataset back = data::read_dataset(path);
        CHECK(back.samples.shape == d.samples.shape);
        CHECK(back.samples.data == d.samples.data); // corpus is already quantized
        CHECK(back.labels == d.labels);
        CHECK(back.num_classes == d.num_classes);
        std::remove(path);
    }

    SUBCASE("single-sample round trip") {
        SkeletonDataset one = data::subset(d, {0, 5});
        one.num_classes = 2;
        one.labels = {0, 1};
        data::write_dataset(one, path);
        SkeletonDataset back = data::read_dataset(path);
        CHECK(back.samples.data == one.samples.data);
        std::remove(path);
    }

    SUBCASE("bad magic") {
        data::write_dataset(d, path);
        auto bytes = num::read_file_bytes(path);
        bytes[0] = 'X';
        num::write_file_bytes(path, bytes);
        CHECK_THROWS_WITH_AS(data::read_dataset(path),
                             doctest::Contains("bad magic"), Error);
        std::remove(path);
    }

    SUBCASE("truncated payload") {
        data::write_dataset(d, path);
        auto bytes = num::read_file_bytes(path);
        bytes.resize(bytes.size() - d.n()); // chop into the label block
        num::write_file_bytes(path, bytes);
        CHECK_THROWS_WITH_AS(data::read_dataset(path), doctest::Contains("truncated"), Error);
        std::remove(path);
    }

    SUBCASE("label outside the class range") {
        data::write_dataset(d, path);
        auto bytes = num::read_file_bytes(path);
        bytes[bytes.size() - 2] = 0xff; // low byte of the final u16 label
        bytes[bytes.size() - 1] = 0x00;
        num::write_file_bytes(path, bytes);
        CHECK_THROWS_AS(data::read_dataset(path), Error);
        std::remove(path);
    }
}
