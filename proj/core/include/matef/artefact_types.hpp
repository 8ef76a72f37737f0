#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace matef {

/// The closed set of artefact datatypes. Every canonical event and every
/// expected/observed count is typed by exactly one member.
enum class ArtefactType : std::uint8_t { File = 0, Mutex = 1, Registry = 2, Port = 3, RPort = 4 };

inline constexpr std::array<ArtefactType, 5> kAllArtefactTypes = {
    ArtefactType::File, ArtefactType::Mutex, ArtefactType::Registry, ArtefactType::Port,
    ArtefactType::RPort};

std::string_view to_string(ArtefactType t);

/// Accepts the canonical name ("File") or the lowercase wire form ("file").
std::optional<ArtefactType> artefact_type_from(std::string_view name);

/// Non-empty subset of ArtefactType, the unit datasets and counts are scoped by.
class TypeCombo {
public:
    /// Throws ConfigError when the mask is empty.
    explicit TypeCombo(std::uint8_t mask);
    TypeCombo(std::initializer_list<ArtefactType> types);

    static TypeCombo file_or_mutex() { return TypeCombo{ArtefactType::File, ArtefactType::Mutex}; }
    static TypeCombo registry_only() { return TypeCombo{ArtefactType::Registry}; }
    static TypeCombo port_only() { return TypeCombo{ArtefactType::Port}; }
    static TypeCombo rport_only() { return TypeCombo{ArtefactType::RPort}; }
    static TypeCombo file_only() { return TypeCombo{ArtefactType::File}; }
    static TypeCombo mutex_only() { return TypeCombo{ArtefactType::Mutex}; }
    static TypeCombo all() { return TypeCombo{0x1f}; }

    /// Parses a preset name (FileOrMutex, PortOnly, ...) or a '+'-joined list
    /// of type names ("File+Registry"). Case-insensitive.
    static std::optional<TypeCombo> parse(std::string_view text);

    /// All 31 non-empty combinations, ascending by mask.
    static std::vector<TypeCombo> all_nonempty();

    bool contains(ArtefactType t) const { return mask_ & (1u << static_cast<unsigned>(t)); }
    std::uint8_t mask() const { return mask_; }
    std::vector<ArtefactType> members() const;

    /// Preset name when the mask matches one, else '+'-joined member names.
    std::string to_string() const;

    bool operator==(const TypeCombo&) const = default;

private:
    std::uint8_t mask_;
};

}  // namespace matef
