#include "matef/artefact_types.hpp"

#include "matef/errors.hpp"
#include "matef/util.hpp"

namespace matef {

std::string_view to_string(ArtefactType t) {
    switch (t) {
        case ArtefactType::File: return "File";
        case ArtefactType::Mutex: return "Mutex";
        case ArtefactType::Registry: return "Registry";
        case ArtefactType::Port: return "Port";
        case ArtefactType::RPort: return "RPort";
    }
    return "?";
}

std::optional<ArtefactType> artefact_type_from(std::string_view name) {
    const std::string lower = to_lower(name);
    if (lower == "file") return ArtefactType::File;
    if (lower == "mutex") return ArtefactType::Mutex;
    if (lower == "registry") return ArtefactType::Registry;
    if (lower == "port") return ArtefactType::Port;
    if (lower == "rport") return ArtefactType::RPort;
    return std::nullopt;
}

TypeCombo::TypeCombo(std::uint8_t mask) : mask_(static_cast<std::uint8_t>(mask & 0x1f)) {
    if (mask_ == 0) throw ConfigError("TypeCombo must not be empty");
}

TypeCombo::TypeCombo(std::initializer_list<ArtefactType> types) : mask_(0) {
    for (ArtefactType t : types) mask_ |= static_cast<std::uint8_t>(1u << static_cast<unsigned>(t));
    if (mask_ == 0) throw ConfigError("TypeCombo must not be empty");
}

std::optional<TypeCombo> TypeCombo::parse(std::string_view text) {
    const std::string lower = to_lower(trim(text));
    if (lower.empty()) return std::nullopt;
    if (lower == "fileormutex") return file_or_mutex();
    if (lower == "registryonly") return registry_only();
    if (lower == "portonly") return port_only();
    if (lower == "rportonly") return rport_only();
    if (lower == "fileonly") return file_only();
    if (lower == "mutexonly") return mutex_only();
    if (lower == "all") return all();
    std::uint8_t mask = 0;
    for (const auto& part : split(lower, '+')) {
        const auto t = artefact_type_from(trim(part));
        if (!t) return std::nullopt;
        mask |= static_cast<std::uint8_t>(1u << static_cast<unsigned>(*t));
    }
    if (mask == 0) return std::nullopt;
    return TypeCombo(mask);
}

std::vector<TypeCombo> TypeCombo::all_nonempty() {
    std::vector<TypeCombo> out;
    out.reserve(31);
    for (std::uint8_t m = 1; m < 32; ++m) out.push_back(TypeCombo(m));
    return out;
}

std::vector<ArtefactType> TypeCombo::members() const {
    std::vector<ArtefactType> out;
    for (ArtefactType t : kAllArtefactTypes)
        if (contains(t)) out.push_back(t);
    return out;
}

std::string TypeCombo::to_string() const {
    if (*this == file_or_mutex()) return "FileOrMutex";
    if (*this == registry_only()) return "RegistryOnly";
    if (*this == port_only()) return "PortOnly";
    if (*this == rport_only()) return "RPortOnly";
    if (*this == file_only()) return "FileOnly";
    if (*this == mutex_only()) return "MutexOnly";
    std::string out;
    for (ArtefactType t : members()) {
        if (!out.empty()) out += '+';
        out += matef::to_string(t);
    }
    return out;
}

}  // namespace matef
