#include "invrom/checkpoint.hpp"

#include "invrom/container.hpp"

namespace invrom {

namespace {

void append_params(const std::vector<Tensor*>& params, std::vector<double>& out) {
    for (const Tensor* p : params) out.insert(out.end(), p->data.begin(), p->data.end());
}

std::size_t restore_params(const std::vector<Tensor*>& params,
                           const std::vector<double>& payload, std::size_t offset,
                           const std::string& path) {
    for (Tensor* p : params) {
        if (offset + p->numel() > payload.size())
            throw TruncatedError("checkpoint payload too short: " + path);
        std::copy(payload.begin() + (std::ptrdiff_t)offset,
                  payload.begin() + (std::ptrdiff_t)(offset + p->numel()),
                  p->data.begin());
        offset += p->numel();
    }
    return offset;
}

std::vector<std::size_t> mlp_widths(const Mlp& mlp) {
    std::vector<std::size_t> w{mlp.in_dim()};
    for (const auto& layer : mlp.layers) w.push_back(layer.weight.cols());
    return w;
}

}  // namespace

void save_inv_ae(const std::string& path, const InvAutoencoder& model,
                 const Normalizer& norm) {
    nlohmann::json h;
    h["input_dim"] = model.net().input_dim();
    h["n_layers"] = model.net().n_layers();
    h["hidden"] = model.net().hidden_width();
    h["spectral_norm"] = model.net().spectral_norm_enabled();
    h["swap_halves"] = model.net().swap_halves();
    h["mask_n"] = model.mask().n;
    h["norm"] = {{"x_min", norm.x_min}, {"x_max", norm.x_max}};
    std::vector<Tensor*> params;
    const_cast<InvAutoencoder&>(model).collect_params(params);
    std::vector<double> payload;
    append_params(params, payload);
    write_container(path, "INVAE001", h, payload);
}

InvAutoencoder load_inv_ae(const std::string& path, Normalizer* norm_out) {
    nlohmann::json h;
    std::vector<double> payload;
    read_container(path, "INVAE001", h, payload);
    if (norm_out && h.contains("norm")) {
        norm_out->x_min = h["norm"].value("x_min", 0.0);
        norm_out->x_max = h["norm"].value("x_max", 1.0);
    }
    InvAutoencoder model(h.at("input_dim").get<std::size_t>(),
                         h.at("mask_n").get<std::size_t>(),
                         h.at("n_layers").get<std::size_t>(),
                         h.at("hidden").get<std::size_t>(), 0);
    model.net().set_swap_halves(h.value("swap_halves", true));
    std::vector<Tensor*> params;
    model.collect_params(params);
    const std::size_t used = restore_params(params, payload, 0, path);
    if (used != payload.size())
        throw TruncatedError("checkpoint payload length mismatch: " + path);
    if (h.value("spectral_norm", false)) {
        model.net().set_spectral_norm(true);
        model.net().power_iterate(20);  // re-converge sigma from the stored weights
    }
    return model;
}

void save_baseline_ae(const std::string& path, const BaselineAe& model,
                      const Normalizer& norm) {
    auto& m = const_cast<BaselineAe&>(model);
    nlohmann::json h;
    h["full_dim"] = model.mask().full_dim;
    h["latent_dim"] = model.mask().n;
    h["encoder_widths"] = mlp_widths(m.encoder());
    h["norm"] = {{"x_min", norm.x_min}, {"x_max", norm.x_max}};
    std::vector<Tensor*> params;
    m.collect_params(params);
    std::vector<double> payload;
    append_params(params, payload);
    write_container(path, "DAE00001", h, payload);
}

BaselineAe load_baseline_ae(const std::string& path, Normalizer* norm_out) {
    nlohmann::json h;
    std::vector<double> payload;
    read_container(path, "DAE00001", h, payload);
    if (norm_out && h.contains("norm")) {
        norm_out->x_min = h["norm"].value("x_min", 0.0);
        norm_out->x_max = h["norm"].value("x_max", 1.0);
    }
    const auto widths = h.at("encoder_widths").get<std::vector<std::size_t>>();
    if (widths.size() < 2) throw BadHeaderError("baseline widths too short: " + path);
    std::vector<std::size_t> hidden(widths.begin() + 1, widths.end() - 1);
    BaselineAe model(widths.front(), widths.back(), hidden, 0);
    std::vector<Tensor*> params;
    model.collect_params(params);
    const std::size_t used = restore_params(params, payload, 0, path);
    if (used != payload.size())
        throw TruncatedError("checkpoint payload length mismatch: " + path);
    return model;
}

void save_rom(const std::string& path, const RomModel& model) {
    auto& m = const_cast<RomModel&>(model);
    nlohmann::json h;
    h["variant"] = variant_name(model.variant);
    h["full_dim"] = model.mask.full_dim;
    h["mask_n"] = model.mask.n;
    h["trained"] = model.trained;
    h["norm"] = {{"x_min", model.norm.x_min}, {"x_max", model.norm.x_max}};
    h["reg_widths"] = mlp_widths(m.regressor.mlp);
    h["reg_in_lo"] = model.regressor.in_lo;
    h["reg_in_hi"] = model.regressor.in_hi;
    if (model.pod) {
        h["pod"] = {{"n", model.pod->n}, {"r", model.pod->r}};
    }
    if (variant_uses_invnet(model.variant)) {
        h["ae"] = {{"kind", "inv"},
                   {"n_layers", model.inv_ae.net().n_layers()},
                   {"hidden", model.inv_ae.net().hidden_width()},
                   {"spectral_norm", model.inv_ae.net().spectral_norm_enabled()},
                   {"swap_halves", model.inv_ae.net().swap_halves()}};
    } else {
        h["ae"] = {{"kind", "dense"}, {"encoder_widths", mlp_widths(m.base_ae.encoder())}};
    }

    std::vector<double> payload;
    if (model.pod) {
        payload.insert(payload.end(), model.pod->u.begin(), model.pod->u.end());
        payload.insert(payload.end(), model.pod->singular_values.begin(),
                       model.pod->singular_values.end());
    }
    std::vector<Tensor*> params;
    m.collect_params(params);
    append_params(params, payload);
    write_container(path, "ROMBDL01", h, payload);
}

RomModel load_rom(const std::string& path) {
    nlohmann::json h;
    std::vector<double> payload;
    read_container(path, "ROMBDL01", h, payload);

    RomModel model;
    model.variant = variant_from_name(h.at("variant").get<std::string>());
    model.mask.full_dim = h.at("full_dim").get<std::size_t>();
    model.mask.n = h.at("mask_n").get<std::size_t>();
    model.trained = h.value("trained", false);
    model.norm.x_min = h.at("norm").at("x_min").get<double>();
    model.norm.x_max = h.at("norm").at("x_max").get<double>();

    std::size_t offset = 0;
    if (h.contains("pod")) {
        PodBasis basis;
        basis.n = h["pod"].at("n").get<std::size_t>();
        basis.r = h["pod"].at("r").get<std::size_t>();
        if (offset + basis.n * basis.r + basis.r > payload.size())
            throw TruncatedError("rom bundle payload too short: " + path);
        basis.u.assign(payload.begin() + (std::ptrdiff_t)offset,
                       payload.begin() + (std::ptrdiff_t)(offset + basis.n * basis.r));
        offset += basis.n * basis.r;
        basis.singular_values.assign(
            payload.begin() + (std::ptrdiff_t)offset,
            payload.begin() + (std::ptrdiff_t)(offset + basis.r));
        offset += basis.r;
        model.pod = std::move(basis);
    }

    const auto& ae = h.at("ae");
    if (ae.at("kind").get<std::string>() == "inv") {
        model.inv_ae = InvAutoencoder(model.mask.full_dim, model.mask.n,
                                      ae.at("n_layers").get<std::size_t>(),
                                      ae.at("hidden").get<std::size_t>(), 0);
        model.inv_ae.net().set_swap_halves(ae.value("swap_halves", true));
    } else {
        const auto widths = ae.at("encoder_widths").get<std::vector<std::size_t>>();
        std::vector<std::size_t> hidden(widths.begin() + 1, widths.end() - 1);
        model.base_ae = BaselineAe(widths.front(), widths.back(), hidden, 0);
    }

    const auto reg_widths = h.at("reg_widths").get<std::vector<std::size_t>>();
    std::vector<std::size_t> reg_hidden(reg_widths.begin() + 1, reg_widths.end());
    model.regressor =
        LatentRegressor::make(reg_widths.front() - 1, reg_widths.back(),
                              {reg_hidden.begin(), reg_hidden.end() - 1}, 0);
    model.regressor.in_lo = h.at("reg_in_lo").get<std::vector<double>>();
    model.regressor.in_hi = h.at("reg_in_hi").get<std::vector<double>>();

    std::vector<Tensor*> params;
    model.collect_params(params);
    const std::size_t used = restore_params(params, payload, offset, path);
    if (used != payload.size())
        throw TruncatedError("rom bundle payload length mismatch: " + path);
    if (ae.at("kind").get<std::string>() == "inv" && ae.value("spectral_norm", false)) {
        model.inv_ae.net().set_spectral_norm(true);
        model.inv_ae.net().power_iterate(20);
    }
    return model;
}

}  // namespace invrom
