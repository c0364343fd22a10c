#include "skelrob/skeldata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "skelrob/checkpoint.hpp"
#include "skelrob/error.hpp"

namespace skelrob::data {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

// ------------------------------------------------------------ validation

void SkeletonDataset::validate() const {
    if (samples.rank() != 4) data_error("dataset: samples must be rank 4");
    int N = samples.shape[0];
    if (samples.shape[1] != kAxes)
        data_error("dataset: expected C=" + std::to_string(kAxes) + ", got " +
                   std::to_string(samples.shape[1]));
    if (static_cast<int>(labels.size()) != N)
        data_error("dataset: " + std::to_string(labels.size()) + " labels for " +
                   std::to_string(N) + " samples");
    if (num_classes <= 0) data_error("dataset: non-positive class count");
    std::vector<int> seen(static_cast<size_t>(num_classes), 0);
    for (int y : labels) {
        if (y < 0 || y >= num_classes)
            data_error("dataset: label " + std::to_string(y) + " outside [0," +
                       std::to_string(num_classes - 1) + "]");
        seen[static_cast<size_t>(y)] = 1;
    }
    for (int k = 0; k < num_classes; ++k)
        if (!seen[static_cast<size_t>(k)])
            data_error("dataset: class " + std::to_string(k) + " has no samples");
    for (double v : samples.data)
        if (!(v >= -1.0 && v <= 1.0))
            data_error("dataset: coordinate " + std::to_string(v) + " outside [-1,1]");
}

std::vector<int> SkeletonDataset::class_histogram() const {
    std::vector<int> h(static_cast<size_t>(num_classes), 0);
    for (int y : labels) h[static_cast<size_t>(y)]++;
    return h;
}

void GaitSubjectParams::validate() const {
    for (double l : limb_lengths)
        if (!(l > 0.0)) usage_error("gait params: limb lengths must be positive");
    if (!(stride_frequency > 0.0)) usage_error("gait params: stride frequency must be positive");
    if (phase_offset < 0.0 || phase_offset >= kTwoPi)
        usage_error("gait params: phase offset outside [0, 2pi)");
    if (arm_swing_amplitude < 0.0 || leg_swing_amplitude < 0.0)
        usage_error("gait params: negative swing amplitude");
    if (joint_noise_stdev < 0.0) usage_error("gait params: negative noise stdev");
    if (occlusion_rate < 0.0 || occlusion_rate > 1.0 || null_frame_rate < 0.0 ||
        null_frame_rate > 1.0)
        usage_error("gait params: rates must be probabilities");
}

// ------------------------------------------------------------ synthesizer

std::vector<GaitSubjectParams> default_subject_params(int num_subjects, uint64_t seed) {
    num::Rng rng = num::Rng(seed).child("subject-params");
    std::vector<GaitSubjectParams> out;
    out.reserve(static_cast<size_t>(num_subjects));
    // base proportions roughly human, in scene units
    const std::array<double, 12> base = {
        0.50, // torso
        0.22, // neck->head
        0.20, // neck->L shoulder
        0.20, // neck->R shoulder
        0.30, // L upper arm
        0.30, // R upper arm
        0.26, // L forearm
        0.26, // R forearm
        0.45, // L thigh
        0.45, // R thigh
        0.42, // L shin
        0.42, // R shin
    };
    // Noise, occlusion and null-frame levels are deliberately substantial:
    // the corpus should reproduce the pathologies of field-collected range
    // data, which keeps classifiers in a moderate-accuracy, gradual-attack
    // regime rather than a brittle near-perfect one.
    for (int s = 0; s < num_subjects; ++s) {
        GaitSubjectParams p;
        double body_scale = rng.uniform(0.91, 1.09);
        for (int i = 0; i < 12; ++i) {
            double jitter = rng.uniform(0.95, 1.05);
            p.limb_lengths[static_cast<size_t>(i)] = base[static_cast<size_t>(i)] * body_scale * jitter;
        }
        // keep left/right limb pairs symmetric; asymmetry adds noise, not identity
        p.limb_lengths[NECK_RSHOULDER] = p.limb_lengths[NECK_LSHOULDER];
        p.limb_lengths[R_UPPER_ARM] = p.limb_lengths[L_UPPER_ARM];
        p.limb_lengths[R_FOREARM] = p.limb_lengths[L_FOREARM];
        p.limb_lengths[R_THIGH] = p.limb_lengths[L_THIGH];
        p.limb_lengths[R_SHIN] = p.limb_lengths[L_SHIN];
        p.stride_frequency = rng.uniform(0.14, 0.28);
        p.phase_offset = rng.uniform(0.0, kTwoPi);
        p.arm_swing_amplitude = rng.uniform(0.25, 0.55);
        p.leg_swing_amplitude = rng.uniform(0.38, 0.65);
        p.joint_noise_stdev = rng.uniform(0.025, 0.050);
        p.occlusion_rate = rng.uniform(0.05, 0.15);
        p.null_frame_rate = rng.uniform(0.010, 0.030);
        out.push_back(p);
    }
    return out;
}

namespace {

struct Vec3 {
    double x = 0, y = 0, z = 0;
};

// Clean joint positions at continuous time t for one subject. Treadmill-style
// walk: all trajectories are functions of the stride phase, so they are
// exactly periodic with period 1/stride_frequency, and a zero swing amplitude
// yields a static pose.
std::array<Vec3, kJoints> pose_at(const GaitSubjectParams& p, double t) {
    const auto& L = p.limb_lengths;
    const double phase = kTwoPi * p.stride_frequency * t + p.phase_offset;
    const double legL = p.leg_swing_amplitude * std::sin(phase);
    const double legR = p.leg_swing_amplitude * std::sin(phase + M_PI);
    const double armL = p.arm_swing_amplitude * std::sin(phase + M_PI);
    const double armR = p.arm_swing_amplitude * std::sin(phase);
    // knee flexion: rear leg bends during swing-through
    const double kneeL = 0.6 * p.leg_swing_amplitude * std::max(0.0, -std::sin(phase));
    const double kneeR = 0.6 * p.leg_swing_amplitude * std::max(0.0, -std::sin(phase + M_PI));
    // pelvis bob at twice the stride frequency plus a small lateral sway
    const double bob = 0.04 * p.leg_swing_amplitude * std::cos(2.0 * phase);
    const double sway = 0.03 * p.leg_swing_amplitude * std::sin(phase);
    const double splay = 0.10;      // lateral leg opening
    const double shoulder_drop = 0.25;
    const double lean = 0.06;       // forward torso lean

    std::array<Vec3, kJoints> j{};
    const double hip_y = L[L_THIGH] + L[L_SHIN];
    Vec3 pelvis{sway, hip_y + bob, 0.0};
    j[PELVIS] = pelvis;
    Vec3 neck{pelvis.x, pelvis.y + L[TORSO] * std::cos(lean), pelvis.z + L[TORSO] * std::sin(lean)};
    j[NECK] = neck;
    j[HEAD] = {neck.x, neck.y + L[NECK_HEAD] * std::cos(lean), neck.z + L[NECK_HEAD] * std::sin(lean)};
    j[L_SHOULDER] = {neck.x - L[NECK_LSHOULDER] * std::cos(shoulder_drop),
                     neck.y - L[NECK_LSHOULDER] * std::sin(shoulder_drop), neck.z};
    j[R_SHOULDER] = {neck.x + L[NECK_RSHOULDER] * std::cos(shoulder_drop),
                     neck.y - L[NECK_RSHOULDER] * std::sin(shoulder_drop), neck.z};

    auto swing_limb = [](const Vec3& origin, double len, double ang, double side_x) {
        // hang from origin, swinging in the sagittal (y-z) plane
        return Vec3{origin.x + side_x, origin.y - len * std::cos(ang), origin.z + len * std::sin(ang)};
    };
    j[L_ELBOW] = swing_limb(j[L_SHOULDER], L[L_UPPER_ARM], armL, -0.02);
    j[R_ELBOW] = swing_limb(j[R_SHOULDER], L[R_UPPER_ARM], armR, 0.02);
    const double elbow_flex = 0.35;
    j[L_HAND] = swing_limb(j[L_ELBOW], L[L_FOREARM], armL + elbow_flex, 0.0);
    j[R_HAND] = swing_limb(j[R_ELBOW], L[R_FOREARM], armR + elbow_flex, 0.0);

    auto leg_joint = [&](const Vec3& origin, double len, double ang, double side) {
        return Vec3{origin.x + side * len * std::sin(splay),
                    origin.y - len * std::cos(ang) * std::cos(splay),
                    origin.z + len * std::sin(ang) * std::cos(splay)};
    };
    j[L_KNEE] = leg_joint(pelvis, L[L_THIGH], legL, -1.0);
    j[R_KNEE] = leg_joint(pelvis, L[R_THIGH], legR, 1.0);
    j[L_FOOT] = leg_joint(j[L_KNEE], L[L_SHIN], legL - kneeL, -1.0);
    j[R_FOOT] = leg_joint(j[R_KNEE], L[R_SHIN], legR - kneeR, 1.0);
    return j;
}

} // namespace

std::vector<SkeletonVideo> synthesize_gait_dataset(int num_subjects, int videos_per_subject,
                                                   int frames_per_video,
                                                   const std::vector<GaitSubjectParams>& params,
                                                   uint64_t seed) {
    if (num_subjects < 2) usage_error("synthesize: need at least 2 subjects");
    if (videos_per_subject <= 0) usage_error("synthesize: non-positive video count");
    if (frames_per_video < 3) usage_error("synthesize: need at least 3 frames per video");
    if (static_cast<int>(params.size()) != num_subjects)
        usage_error("synthesize: parameter count " + std::to_string(params.size()) +
                    " != subject count " + std::to_string(num_subjects));
    for (const auto& p : params) p.validate();

    num::Rng master(seed);
    std::vector<SkeletonVideo> out;
    out.reserve(static_cast<size_t>(num_subjects) * videos_per_subject);
    for (int s = 0; s < num_subjects; ++s) {
        const GaitSubjectParams& p = params[static_cast<size_t>(s)];
        for (int v = 0; v < videos_per_subject; ++v) {
            num::Rng rng = master.child("video", static_cast<uint64_t>(s) * 100003ULL +
                                                     static_cast<uint64_t>(v));
            SkeletonVideo video;
            video.label = s;
            video.frames = num::Tensor({kAxes, frames_per_video, kJoints});
            // each video starts at a random point in the stride cycle
            double t0 = rng.uniform(0.0, 1.0 / p.stride_frequency);
            std::array<std::array<double, 3>, kJoints> prev{};
            for (int t = 0; t < frames_per_video; ++t) {
                auto pose = pose_at(p, t0 + t);
                std::array<std::array<double, 3>, kJoints> cur{};
                for (int q = 0; q < kJoints; ++q) {
                    cur[static_cast<size_t>(q)] = {
                        pose[static_cast<size_t>(q)].x + rng.normal(0.0, p.joint_noise_stdev),
                        pose[static_cast<size_t>(q)].y + rng.normal(0.0, p.joint_noise_stdev),
                        pose[static_cast<size_t>(q)].z + rng.normal(0.0, p.joint_noise_stdev)};
                }
                for (int q = 0; q < kJoints; ++q) {
                    bool occluded = rng.uniform(0.0, 1.0) < p.occlusion_rate;
                    if (occluded && t > 0) cur[static_cast<size_t>(q)] = prev[static_cast<size_t>(q)];
                }
                bool null_frame = rng.uniform(0.0, 1.0) < p.null_frame_rate;
                if (null_frame)
                    for (auto& c : cur) c = {0.0, 0.0, 0.0};
                for (int a = 0; a < kAxes; ++a)
                    for (int q = 0; q < kJoints; ++q)
                        video.frames.data[static_cast<size_t>((a * frames_per_video + t) * kJoints + q)] =
                            cur[static_cast<size_t>(q)][static_cast<size_t>(a)];
                prev = cur;
            }
            out.push_back(std::move(video));
        }
    }
    return out;
}

// ------------------------------------------------------------ preprocess

PreprocessResult preprocess(const num::Tensor& video) {
    if (video.rank() != 3 || video.shape[0] != kAxes || video.shape[2] != kJoints)
        usage_error("preprocess: expected [3, T, 13] video, got " + num::shape_str(video.shape));
    int T = video.shape[1];
    PreprocessResult out;
    out.video = num::Tensor({kAxes, T, kJoints});

    auto get = [&](const num::Tensor& v, int a, int t, int q) {
        return v.data[static_cast<size_t>((a * T + t) * kJoints + q)];
    };
    auto set = [&](num::Tensor& v, int a, int t, int q, double val) {
        v.data[static_cast<size_t>((a * T + t) * kJoints + q)] = val;
    };

    for (int t = 0; t < T; ++t) {
        double cx = 0, cy = 0, cz = 0;
        for (int q = 0; q < kJoints; ++q) {
            cx += get(video, 0, t, q);
            cy += get(video, 1, t, q);
            cz += get(video, 2, t, q);
        }
        cx /= kJoints;
        cy /= kJoints;
        cz /= kJoints;

        std::array<double, kJoints> px, py, pz;
        for (int q = 0; q < kJoints; ++q) {
            px[static_cast<size_t>(q)] = get(video, 0, t, q) - cx;
            py[static_cast<size_t>(q)] = get(video, 1, t, q) - cy;
            pz[static_cast<size_t>(q)] = get(video, 2, t, q) - cz;
        }

        double sx = px[R_SHOULDER] - px[L_SHOULDER];
        double sz = pz[R_SHOULDER] - pz[L_SHOULDER];
        double norm = std::hypot(sx, sz);
        double cth = 1.0, sth = 0.0;
        if (norm < 1e-9) {
            out.degenerate_frames.push_back(t);
        } else {
            // rotate by -theta about y so the shoulder vector lands on +x
            cth = sx / norm;
            sth = sz / norm;
        }
        auto rot = [&](double& x, double& z) {
            double nx = cth * x + sth * z;
            double nz = -sth * x + cth * z;
            x = nx;
            z = nz;
        };
        for (int q = 0; q < kJoints; ++q) rot(px[static_cast<size_t>(q)], pz[static_cast<size_t>(q)]);

        // 180-degree tie-break: shoulder x (head - pelvis) must point forward
        double ux = px[HEAD] - px[PELVIS];
        double uy = py[HEAD] - py[PELVIS];
        double sxr = px[R_SHOULDER] - px[L_SHOULDER];
        double syr = py[R_SHOULDER] - py[L_SHOULDER];
        double cross_z = sxr * uy - syr * ux;
        if (norm >= 1e-9 && cross_z < 0.0) {
            for (int q = 0; q < kJoints; ++q) {
                px[static_cast<size_t>(q)] = -px[static_cast<size_t>(q)];
                pz[static_cast<size_t>(q)] = -pz[static_cast<size_t>(q)];
            }
        }

        for (int q = 0; q < kJoints; ++q) {
            set(out.video, 0, t, q, px[static_cast<size_t>(q)]);
            set(out.video, 1, t, q, py[static_cast<size_t>(q)]);
            set(out.video, 2, t, q, pz[static_cast<size_t>(q)]);
        }
    }

    double maxabs = 0.0;
    for (double v : out.video.data) maxabs = std::max(maxabs, std::fabs(v));
    if (maxabs > 1.0) {
        double g = 1.0 / maxabs;
        for (double& v : out.video.data) v *= g;
    }
    return out;
}

std::vector<num::Tensor> segment(const num::Tensor& video, int window) {
    if (video.rank() != 3) usage_error("segment: expected rank-3 video");
    if (window <= 0) usage_error("segment: non-positive window");
    int T = video.shape[1];
    if (T < window)
        usage_error("segment: video has " + std::to_string(T) + " frames, window is " +
                    std::to_string(window));
    int C = video.shape[0], J = video.shape[2];
    int count = T / window;
    std::vector<num::Tensor> out;
    out.reserve(static_cast<size_t>(count));
    for (int w = 0; w < count; ++w) {
        num::Tensor s({C, window, J});
        for (int a = 0; a < C; ++a)
            for (int t = 0; t < window; ++t)
                std::memcpy(&s.data[static_cast<size_t>((a * window + t) * J)],
                            &video.data[static_cast<size_t>((a * T + w * window + t) * J)],
                            static_cast<size_t>(J) * sizeof(double));
        out.push_back(std::move(s));
    }
    return out;
}

SkeletonDataset build_dataset(const std::vector<num::Tensor>& windows,
                              const std::vector<int>& labels, int num_classes) {
    if (windows.empty()) data_error("build_dataset: no samples");
    if (windows.size() != labels.size()) data_error("build_dataset: label/sample count mismatch");
    const auto& s0 = windows.front().shape;
    SkeletonDataset d;
    d.num_classes = num_classes;
    d.labels = labels;
    d.samples = num::Tensor({static_cast<int>(windows.size()), s0[0], s0[1], s0[2]});
    int64_t per = num::numel_of(s0);
    for (size_t i = 0; i < windows.size(); ++i) {
        if (windows[i].shape != s0) data_error("build_dataset: inconsistent sample shapes");
        for (int64_t j = 0; j < per; ++j)
            d.samples.data[static_cast<size_t>(i) * per + static_cast<size_t>(j)] =
                static_cast<double>(static_cast<float>(windows[i].data[static_cast<size_t>(j)]));
    }
    d.validate();
    return d;
}

SkeletonDataset make_standard_corpus(int num_subjects, int windows_per_subject, uint64_t seed) {
    if (windows_per_subject <= 0) usage_error("make_standard_corpus: non-positive window count");
    auto params = default_subject_params(num_subjects, seed);
    const int videos_per_subject = 10;
    int windows_per_video = (windows_per_subject + videos_per_subject - 1) / videos_per_subject;
    int frames_per_video = kFrames * windows_per_video;
    auto videos = synthesize_gait_dataset(num_subjects, videos_per_subject, frames_per_video,
                                          params, seed);
    std::vector<num::Tensor> windows;
    std::vector<int> labels;
    std::vector<int> per_subject(static_cast<size_t>(num_subjects), 0);
    for (const auto& v : videos) {
        auto pre = preprocess(v.frames);
        for (auto& w : segment(pre.video, kFrames)) {
            if (per_subject[static_cast<size_t>(v.label)] >= windows_per_subject) break;
            windows.push_back(std::move(w));
            labels.push_back(v.label);
            per_subject[static_cast<size_t>(v.label)]++;
        }
    }
    return build_dataset(windows, labels, num_subjects);
}

// ------------------------------------------------------------ folds

std::vector<int> FoldSplit::fold_indices(int fold) const {
    std::vector<int> out;
    for (size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] == fold) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<int> FoldSplit::complement_indices(int fold) const {
    std::vector<int> out;
    for (size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] != fold) out.push_back(static_cast<int>(i));
    return out;
}

FoldSplit stratified_kfold(const SkeletonDataset& dataset, int fold_count, uint64_t seed) {
    if (fold_count < 2) usage_error("stratified_kfold: need at least 2 folds");
    auto hist = dataset.class_histogram();
    for (int k = 0; k < dataset.num_classes; ++k)
        if (hist[static_cast<size_t>(k)] < fold_count)
            data_error("stratified_kfold: class " + std::to_string(k) + " has " +
                       std::to_string(hist[static_cast<size_t>(k)]) + " samples, fewer than " +
                       std::to_string(fold_count) + " folds");
    num::Rng rng = num::Rng(seed).child("kfold");
    FoldSplit split;
    split.fold_count = fold_count;
    split.assignments.assign(static_cast<size_t>(dataset.n()), -1);
    for (int k = 0; k < dataset.num_classes; ++k) {
        std::vector<int> idx;
        for (int i = 0; i < dataset.n(); ++i)
            if (dataset.labels[static_cast<size_t>(i)] == k) idx.push_back(i);
        rng.shuffle(idx);
        for (size_t i = 0; i < idx.size(); ++i)
            split.assignments[static_cast<size_t>(idx[i])] = static_cast<int>(i) % fold_count;
    }
    return split;
}

SkeletonDataset subset(const SkeletonDataset& dataset, const std::vector<int>& indices) {
    SkeletonDataset out;
    out.num_classes = dataset.num_classes;
    int C = dataset.samples.shape[1], T = dataset.samples.shape[2], J = dataset.samples.shape[3];
    out.samples = num::Tensor({static_cast<int>(indices.size()), C, T, J});
    int64_t per = static_cast<int64_t>(C) * T * J;
    for (size_t i = 0; i < indices.size(); ++i) {
        int src = indices[i];
        if (src < 0 || src >= dataset.n()) usage_error("subset: index out of range");
        std::memcpy(&out.samples.data[static_cast<size_t>(i) * static_cast<size_t>(per)],
                    &dataset.samples.data[static_cast<size_t>(src) * static_cast<size_t>(per)],
                    static_cast<size_t>(per) * sizeof(double));
        out.labels.push_back(dataset.labels[static_cast<size_t>(src)]);
    }
    return out;
}

// ------------------------------------------------------------ file format

namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_f32(std::vector<uint8_t>& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

} // namespace

void write_dataset(const SkeletonDataset& dataset, const std::string& path) {
    dataset.validate();
    if (dataset.num_classes > 0xffff) data_error("write_dataset: too many classes for u16 labels");
    std::vector<uint8_t> out;
    out.insert(out.end(), {'S', 'K', 'L', '1'});
    put_u32(out, static_cast<uint32_t>(dataset.samples.shape[0]));
    put_u32(out, static_cast<uint32_t>(dataset.samples.shape[1]));
    put_u32(out, static_cast<uint32_t>(dataset.samples.shape[2]));
    put_u32(out, static_cast<uint32_t>(dataset.samples.shape[3]));
    put_u32(out, static_cast<uint32_t>(dataset.num_classes));
    for (double v : dataset.samples.data) put_f32(out, static_cast<float>(v));
    for (int y : dataset.labels) put_u16(out, static_cast<uint16_t>(y));
    num::write_file_bytes(path, out);
}

SkeletonDataset read_dataset(const std::string& path) {
    auto bytes = num::read_file_bytes(path);
    size_t pos = 0;
    auto need = [&](size_t n) {
        if (pos + n > bytes.size()) data_error("dataset '" + path + "': truncated file");
    };
    need(4);
    if (std::memcmp(bytes.data(), "SKL1", 4) != 0)
        data_error("dataset '" + path + "': bad magic, expected SKL1");
    pos = 4;
    auto u32 = [&]() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[pos + static_cast<size_t>(i)]) << (8 * i);
        pos += 4;
        return v;
    };
    uint32_t N = u32(), C = u32(), T = u32(), J = u32(), K = u32();
    if (N == 0 || C == 0 || T == 0 || J == 0 || K == 0)
        data_error("dataset '" + path + "': zero dimension in header");
    SkeletonDataset d;
    d.num_classes = static_cast<int>(K);
    d.samples = num::Tensor({static_cast<int>(N), static_cast<int>(C), static_cast<int>(T),
                             static_cast<int>(J)});
    int64_t total = d.samples.numel();
    need(static_cast<size_t>(total) * 4);
    for (int64_t i = 0; i < total; ++i) {
        uint32_t bits = 0;
        for (int b = 0; b < 4; ++b)
            bits |= static_cast<uint32_t>(bytes[pos + static_cast<size_t>(b)]) << (8 * b);
        pos += 4;
        float f;
        std::memcpy(&f, &bits, 4);
        d.samples.data[static_cast<size_t>(i)] = static_cast<double>(f);
    }
    need(static_cast<size_t>(N) * 2);
    for (uint32_t i = 0; i < N; ++i) {
        uint16_t y = static_cast<uint16_t>(bytes[pos] | (bytes[pos + 1] << 8));
        pos += 2;
        if (y >= K)
            data_error("dataset '" + path + "': label " + std::to_string(y) + " >= K=" +
                       std::to_string(K));
        d.labels.push_back(static_cast<int>(y));
    }
    if (pos != bytes.size()) data_error("dataset '" + path + "': trailing bytes");
    d.validate();
    return d;
}

} // namespace skelrob::data
