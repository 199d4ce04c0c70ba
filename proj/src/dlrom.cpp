#include "invrom/dlrom.hpp"

#include <cmath>
#include <cstring>

namespace invrom {

std::string variant_name(RomVariant v) {
    switch (v) {
        case RomVariant::Dlrom: return "dlrom";
        case RomVariant::PodDlrom: return "pod_dlrom";
        case RomVariant::InvDlrom: return "inv_dlrom";
        case RomVariant::PodInvDlrom: return "pod_inv_dlrom";
    }
    return "?";
}

RomVariant variant_from_name(const std::string& name) {
    if (name == "dlrom") return RomVariant::Dlrom;
    if (name == "pod_dlrom") return RomVariant::PodDlrom;
    if (name == "inv_dlrom") return RomVariant::InvDlrom;
    if (name == "pod_inv_dlrom") return RomVariant::PodInvDlrom;
    throw std::invalid_argument("unknown ROM variant: " + name);
}

bool variant_uses_pod(RomVariant v) {
    return v == RomVariant::PodDlrom || v == RomVariant::PodInvDlrom;
}

bool variant_uses_invnet(RomVariant v) {
    return v == RomVariant::InvDlrom || v == RomVariant::PodInvDlrom;
}

LatentRegressor LatentRegressor::make(std::size_t param_dim, std::size_t latent_dim,
                                      const std::vector<std::size_t>& hidden,
                                      std::uint64_t seed) {
    LatentRegressor reg;
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> widths{1 + param_dim};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(latent_dim);
    reg.mlp = Mlp::make(widths, rng);
    reg.in_lo.assign(1 + param_dim, 0.0);
    reg.in_hi.assign(1 + param_dim, 1.0);
    return reg;
}

void LatentRegressor::normalize_input(double t, const std::vector<double>& mu,
                                      double* out) const {
    const std::size_t d = in_lo.size();
    if (mu.size() + 1 != d)
        throw std::invalid_argument("regressor: parameter dimension mismatch");
    for (std::size_t i = 0; i < d; ++i) {
        const double v = i == 0 ? t : mu[i - 1];
        const double w = in_hi[i] - in_lo[i];
        out[i] = w > 0.0 ? (v - in_lo[i]) / w : 0.0;
    }
}

void RomModel::collect_params(std::vector<Tensor*>& out) {
    if (variant_uses_invnet(variant))
        inv_ae.collect_params(out);
    else
        base_ae.collect_params(out);
    regressor.mlp.collect_params(out);
}

int RomModel::reconstruct(Tape& tape, int x) const {
    return variant_uses_invnet(variant) ? inv_ae.reconstruct(tape, x)
                                        : base_ae.reconstruct(tape, x);
}

int RomModel::encode_latent(Tape& tape, int x) const {
    if (variant_uses_invnet(variant)) {
        int y = inv_ae.net().forward(tape, x);
        return tape.slice_cols(y, 0, mask.n);
    }
    return base_ae.encode(tape, x);
}

int RomModel::decode_padded(Tape& tape, int z_lat) const {
    if (variant_uses_invnet(variant)) {
        const std::size_t rows = tape.val(z_lat).rows();
        int z = z_lat;
        if (mask.n < mask.full_dim) {
            int zeros = tape.constant(Tensor(rows, mask.full_dim - mask.n));
            z = mask.n == 0 ? zeros : tape.concat_cols(z_lat, zeros);
        }
        return inv_ae.decode(tape, z);
    }
    return base_ae.decode(tape, z_lat);
}

namespace {

Tensor gather_regressor_inputs(const RomModel& model, const SnapshotMatrix& x,
                               const std::size_t* idx, std::size_t count) {
    const std::size_t d = model.regressor.in_dim();
    Tensor in(count, d);
    for (std::size_t i = 0; i < count; ++i) {
        const ColumnMeta& meta = x.meta[idx[i]];
        model.regressor.normalize_input(meta.t, meta.mu, in.data.data() + i * d);
    }
    return in;
}

}  // namespace

int rom_loss_node(RomModel& model, Tape& tape, const SnapshotMatrix& x_norm,
                  const std::size_t* idx, std::size_t count, double alpha) {
    if (alpha < 0.0 || alpha > 1.0)
        throw std::invalid_argument("dlrom: alpha=" + std::to_string(alpha) +
                                    " outside [0,1]");
    int x = tape.constant(gather_columns(x_norm, idx, count));
    int reg_in = tape.constant(gather_regressor_inputs(model, x_norm, idx, count));
    int z_tilde = model.regressor.mlp.forward(tape, reg_in);        // [B x n]
    int x_tilde = model.decode_padded(tape, z_tilde);               // [B x full]
    int z = model.encode_latent(tape, x);                           // [B x n]
    const double inv_count = 1.0 / (double)count;
    int rec = tape.scale(tape.sum_sq(tape.sub(x, x_tilde)), 0.5 * alpha * inv_count);
    int lat = tape.scale(tape.sum_sq(tape.sub(z, z_tilde)),
                         0.5 * (1.0 - alpha) * inv_count);
    return tape.add(rec, lat);
}

double rom_loss(RomModel& model, const SnapshotMatrix& x_norm,
                const std::vector<std::size_t>& idx, double alpha) {
    Tape tape;
    return tape.val(rom_loss_node(model, tape, x_norm, idx.data(), idx.size(), alpha))
        .data[0];
}

TrainHistory train_rom(RomModel& model, const SnapshotMatrix& x_train_norm,
                       const SnapshotMatrix& x_valid_norm, const TrainConfig& cfg) {
    if (variant_uses_pod(model.variant) && !model.pod)
        throw std::invalid_argument("dlrom: POD variant without a precomputed basis");
    // Regressor input ranges from the training metadata.
    const std::size_t d = model.regressor.in_dim();
    std::vector<double>& lo = model.regressor.in_lo;
    std::vector<double>& hi = model.regressor.in_hi;
    lo.assign(d, std::numeric_limits<double>::infinity());
    hi.assign(d, -std::numeric_limits<double>::infinity());
    for (const auto& meta : x_train_norm.meta) {
        for (std::size_t i = 0; i < d; ++i) {
            const double v = i == 0 ? meta.t : meta.mu[i - 1];
            lo[i] = std::min(lo[i], v);
            hi[i] = std::max(hi[i], v);
        }
    }

    std::vector<Tensor*> params;
    model.collect_params(params);

    auto batch_loss = [&](Tape& tape, const std::size_t* idx, std::size_t count) {
        return rom_loss_node(model, tape, x_train_norm, idx, count, cfg.alpha);
    };

    std::vector<std::size_t> vidx(x_valid_norm.cols);
    std::iota(vidx.begin(), vidx.end(), 0);
    if (cfg.valid_subset > 0 && cfg.valid_subset < vidx.size()) {
        std::mt19937_64 vrng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
        std::shuffle(vidx.begin(), vidx.end(), vrng);
        vidx.resize(cfg.valid_subset);
        std::sort(vidx.begin(), vidx.end());
    }
    auto valid_loss = [&]() {
        double total = 0.0;
        for (std::size_t lo_i = 0; lo_i < vidx.size(); lo_i += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, vidx.size() - lo_i);
            Tape tape;
            total += tape.val(rom_loss_node(model, tape, x_valid_norm,
                                            vidx.data() + lo_i, count, cfg.alpha))
                         .data[0] *
                     (double)count;
        }
        return vidx.empty() ? 0.0 : total / (double)vidx.size();
    };

    std::function<void()> pre_step;
    if (variant_uses_invnet(model.variant) &&
        model.inv_ae.net().spectral_norm_enabled())
        pre_step = [&model]() { model.inv_ae.net().power_iterate(1); };

    auto hist = run_training(std::move(params), batch_loss, x_train_norm.cols, cfg,
                             valid_loss, pre_step);
    model.trained = true;
    return hist;
}

std::vector<double> rom_infer(const RomModel& model, double t,
                              const std::vector<double>& mu) {
    if (!model.trained)
        throw std::logic_error("rom_infer: model has not been trained or loaded");
    Tape tape;
    Tensor in(1, model.regressor.in_dim());
    model.regressor.normalize_input(t, mu, in.data.data());
    int z_tilde = model.regressor.mlp.forward(tape, tape.constant(std::move(in)));
    int decoded = model.decode_padded(tape, z_tilde);
    const Tensor& out = tape.val(decoded);

    if (variant_uses_pod(model.variant)) {
        std::vector<double> h(out.data);
        for (auto& v : h) v = model.norm.unscale(v);
        return pod_reconstruct(*model.pod, h.data());
    }
    std::vector<double> x(out.data);
    for (auto& v : x) v = model.norm.unscale(v);
    return x;
}

}  // namespace invrom
