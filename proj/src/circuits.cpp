#include "qfe/circuits.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qfe {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

double resolve(const AngleSource& src, std::span<const double> inputs,
               std::span<const double> weights) {
    if (!src.is_slot()) return src.fixed;
    const auto& values = (src.origin == SlotOrigin::Input) ? inputs : weights;
    return src.scale * values[static_cast<std::size_t>(src.slot)];
}

class AnsatzBuilder {
public:
    explicit AnsatzBuilder(int n_qubits) : n_(n_qubits) { tpl_.n_qubits = n_qubits; }

    void rotation_all(GateKind kind) {
        for (int q = 0; q < n_; ++q) push_rotation(kind, q, next_slot());
    }
    void push_rotation(GateKind kind, int target, AngleSource angle) {
        tpl_.gates.push_back({kind, target, -1, angle});
    }
    void push(const TemplateGate& g) { tpl_.gates.push_back(g); }

    // CRX(control, target; w) as RY/RZ/CNOT primitives, application order:
    //   RY(t, -pi/2) RZ(t, +w/2) CNOT RZ(t, -w/2) CNOT RY(t, +pi/2)
    void crx(int control, int target) {
        const int slot = tpl_.n_weight_slots++;
        push_rotation(GateKind::RY, target, AngleSource::fixed_angle(-kHalfPi));
        push_rotation(GateKind::RZ, target, AngleSource::weight(slot, 0.5));
        push({GateKind::CNOT, target, control, {}});
        push_rotation(GateKind::RZ, target, AngleSource::weight(slot, -0.5));
        push({GateKind::CNOT, target, control, {}});
        push_rotation(GateKind::RY, target, AngleSource::fixed_angle(kHalfPi));
    }

    AngleSource next_slot() { return AngleSource::weight(tpl_.n_weight_slots++); }
    int n() const { return n_; }
    CircuitTemplate take() { return std::move(tpl_); }

private:
    int n_;
    CircuitTemplate tpl_;
};

void append_layer(AnsatzBuilder& b, AnsatzKind kind) {
    const int n = b.n();
    switch (kind) {
        case AnsatzKind::Sim1:
            b.rotation_all(GateKind::RX);
            b.rotation_all(GateKind::RZ);
            break;
        case AnsatzKind::Sim2:
            b.rotation_all(GateKind::RX);
            b.rotation_all(GateKind::RZ);
            for (int q = n - 1; q >= 1; --q) b.push({GateKind::CNOT, q - 1, q, {}});
            break;
        case AnsatzKind::Sim9:
            for (int q = 0; q < n; ++q) b.push({GateKind::H, q, -1, {}});
            for (int q = 0; q + 1 < n; ++q) b.push({GateKind::CZ, q + 1, q, {}});
            b.rotation_all(GateKind::RX);
            break;
        case AnsatzKind::Sim14:
            b.rotation_all(GateKind::RY);
            for (int q = 0; q < n; ++q) b.crx(q, (q + 1) % n);
            b.rotation_all(GateKind::RY);
            for (int q = 0; q < n; ++q) b.crx(q, (q + n - 1) % n);
            break;
        case AnsatzKind::Sim15:
            b.rotation_all(GateKind::RY);
            for (int q = 0; q < n; ++q) b.push({GateKind::CNOT, (q + 1) % n, q, {}});
            b.rotation_all(GateKind::RY);
            for (int q = 0; q < n; ++q) b.push({GateKind::CNOT, (q + n - 1) % n, q, {}});
            break;
        case AnsatzKind::QaoaHeuristic:
            for (int q = 0; q + 1 < n; ++q) {
                b.push({GateKind::CNOT, q + 1, q, {}});
                b.push_rotation(GateKind::RZ, q + 1, b.next_slot());
                b.push({GateKind::CNOT, q + 1, q, {}});
            }
            b.rotation_all(GateKind::RX);
            break;
    }
}

bool has_entanglers(AnsatzKind kind) { return kind != AnsatzKind::Sim1; }

int per_layer_weights(AnsatzKind kind, int n) {
    switch (kind) {
        case AnsatzKind::Sim1:
        case AnsatzKind::Sim2:
        case AnsatzKind::Sim15: return 2 * n;
        case AnsatzKind::Sim9: return n;
        case AnsatzKind::Sim14: return 4 * n;
        case AnsatzKind::QaoaHeuristic: return 2 * n - 1;
    }
    return 0;
}

}  // namespace

std::vector<Gate> CircuitTemplate::bind(std::span<const double> inputs,
                                        std::span<const double> weights) const {
    std::vector<Gate> out;
    bind_into(inputs, weights, out);
    return out;
}

void CircuitTemplate::bind_into(std::span<const double> inputs, std::span<const double> weights,
                                std::vector<Gate>& out) const {
    if (static_cast<int>(inputs.size()) != n_input_slots) {
        throw std::invalid_argument("binding expects " + std::to_string(n_input_slots) +
                                    " input values, got " + std::to_string(inputs.size()));
    }
    if (static_cast<int>(weights.size()) != n_weight_slots) {
        throw std::invalid_argument("binding expects " + std::to_string(n_weight_slots) +
                                    " weight values, got " + std::to_string(weights.size()));
    }
    out.clear();
    out.reserve(gates.size());
    for (const TemplateGate& tg : gates) {
        Gate g{tg.kind, tg.target, tg.control, 0.0};
        if (g.is_rotation()) g.angle = resolve(tg.angle, inputs, weights);
        out.push_back(g);
    }
}

std::vector<SlotOccurrence> CircuitTemplate::occurrences(SlotOrigin origin, int slot) const {
    const int count = (origin == SlotOrigin::Input) ? n_input_slots : n_weight_slots;
    if (slot < 0 || slot >= count) {
        throw std::out_of_range("slot " + std::to_string(slot) + " out of range (" +
                                std::to_string(count) + " declared)");
    }
    std::vector<SlotOccurrence> occ;
    for (std::size_t i = 0; i < gates.size(); ++i) {
        const AngleSource& a = gates[i].angle;
        if (a.is_slot() && a.origin == origin && a.slot == slot) occ.push_back({i, a.scale});
    }
    return occ;
}

int CircuitTemplate::occurrence_count() const {
    int count = 0;
    for (const TemplateGate& g : gates) {
        if (g.angle.is_slot()) ++count;
    }
    return count;
}

void CircuitTemplate::validate() const {
    std::vector<int> input_seen(n_input_slots, 0), weight_seen(n_weight_slots, 0);
    for (const TemplateGate& g : gates) {
        if (g.target < 0 || g.target >= n_qubits)
            throw std::invalid_argument("template gate target out of range");
        if (!g.angle.is_slot()) continue;
        if (!Gate{g.kind}.is_rotation())
            throw std::invalid_argument("parameter slot bound to a non-rotation gate");
        auto& seen = (g.angle.origin == SlotOrigin::Input) ? input_seen : weight_seen;
        if (g.angle.slot >= static_cast<int>(seen.size()))
            throw std::invalid_argument("slot index exceeds declared count");
        ++seen[static_cast<std::size_t>(g.angle.slot)];
    }
    for (int c : input_seen)
        if (c == 0) throw std::invalid_argument("declared input slot never referenced");
    for (int c : weight_seen)
        if (c == 0) throw std::invalid_argument("declared weight slot never referenced");
}

CircuitTemplate build_encoder(int n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxQubits)
        throw std::invalid_argument("encoder qubit count out of range");
    CircuitTemplate tpl;
    tpl.n_qubits = n_qubits;
    tpl.n_input_slots = n_qubits;
    for (int q = 0; q < n_qubits; ++q)
        tpl.gates.push_back({GateKind::RY, q, -1, AngleSource::input(q)});
    return tpl;
}

AnsatzKind ansatz_from_name(std::string_view name) {
    if (name == "sim1") return AnsatzKind::Sim1;
    if (name == "sim2") return AnsatzKind::Sim2;
    if (name == "sim9") return AnsatzKind::Sim9;
    if (name == "sim14") return AnsatzKind::Sim14;
    if (name == "sim15") return AnsatzKind::Sim15;
    if (name == "qaoa") return AnsatzKind::QaoaHeuristic;
    throw std::invalid_argument("unknown ansatz name: " + std::string(name));
}

std::string_view ansatz_name(AnsatzKind kind) {
    switch (kind) {
        case AnsatzKind::Sim1: return "sim1";
        case AnsatzKind::Sim2: return "sim2";
        case AnsatzKind::Sim9: return "sim9";
        case AnsatzKind::Sim14: return "sim14";
        case AnsatzKind::Sim15: return "sim15";
        case AnsatzKind::QaoaHeuristic: return "qaoa";
    }
    return "?";
}

std::vector<AnsatzKind> all_ansatz_kinds() {
    return {AnsatzKind::Sim1, AnsatzKind::Sim2,  AnsatzKind::Sim9,
            AnsatzKind::Sim14, AnsatzKind::Sim15, AnsatzKind::QaoaHeuristic};
}

CircuitTemplate build_ansatz(const AnsatzPreset& preset, int n_qubits) {
    if (preset.layers < 1) throw std::invalid_argument("ansatz needs at least one layer");
    if (n_qubits < 1 || n_qubits > kMaxQubits)
        throw std::invalid_argument("ansatz qubit count out of range");
    if (n_qubits < 2 && has_entanglers(preset.kind)) {
        throw std::invalid_argument(std::string(ansatz_name(preset.kind)) +
                                    " contains entanglers and needs at least 2 qubits");
    }
    AnsatzBuilder b(n_qubits);
    for (int layer = 0; layer < preset.layers; ++layer) append_layer(b, preset.kind);
    CircuitTemplate tpl = b.take();
    tpl.validate();
    return tpl;
}

int weight_count(const AnsatzPreset& preset, int n_qubits) {
    if (preset.layers < 1) throw std::invalid_argument("ansatz needs at least one layer");
    if (n_qubits < 2 && has_entanglers(preset.kind))
        throw std::invalid_argument("preset needs at least 2 qubits");
    return preset.layers * per_layer_weights(preset.kind, n_qubits);
}

CircuitTemplate compose(const CircuitTemplate& encoder, const CircuitTemplate& ansatz) {
    if (encoder.n_qubits != ansatz.n_qubits)
        throw std::invalid_argument("encoder and ansatz qubit counts differ");
    if (encoder.n_weight_slots != 0)
        throw std::invalid_argument("encoder must not declare weight slots");
    if (ansatz.n_input_slots != 0)
        throw std::invalid_argument("ansatz must not declare input slots");
    CircuitTemplate tpl;
    tpl.n_qubits = encoder.n_qubits;
    tpl.n_input_slots = encoder.n_input_slots;
    tpl.n_weight_slots = ansatz.n_weight_slots;
    tpl.gates = encoder.gates;
    tpl.gates.insert(tpl.gates.end(), ansatz.gates.begin(), ansatz.gates.end());
    return tpl;
}

}  // namespace qfe
