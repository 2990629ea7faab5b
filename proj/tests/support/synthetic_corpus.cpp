#include "support/synthetic_corpus.hpp"

#include <sstream>

#include "ystylo/rng.hpp"

namespace ystylo::testsupport {

namespace {

std::string hex_byte_at(std::uint64_t h, int i, bool upper) {
    static const char* lower_digits = "0123456789abcdef";
    static const char* upper_digits = "0123456789ABCDEF";
    const char* digits = upper ? upper_digits : lower_digits;
    unsigned byte = static_cast<unsigned>((h >> (8 * (i % 8))) & 0xff);
    std::string out;
    out += digits[byte >> 4];
    out += digits[byte & 0xf];
    return out;
}

}  // namespace

std::vector<std::string> diverse_rule_corpus(std::size_t count,
                                             std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<std::string> rules;
    rules.reserve(count);

    const std::vector<std::string> words = {
        "loader",  "dropper", "beacon",  "packer", "stealer",
        "implant", "decoder", "payload", "config", "channel"};
    const std::vector<std::string> mods = {"nocase", "wide", "ascii", "fullword",
                                           "nocase wide", "ascii fullword",
                                           "xor", "base64", "private"};
    const std::vector<std::string> tags = {"apt", "crimeware", "pua", "tool"};

    for (std::size_t i = 0; i < count; ++i) {
        std::ostringstream os;
        const std::uint64_t h = rng.next();
        const bool with_comment = rng.below(3) == 0;
        const bool with_tags = rng.below(3) == 0;
        const bool with_meta = rng.below(2) == 0;
        const bool upper_hex = rng.below(2) == 0;
        const std::size_t n_text = 1 + rng.below(4);
        const bool with_hex = rng.below(2) == 0;
        const bool with_regex = rng.below(3) == 0;
        const std::size_t cond_shape = rng.below(8);

        if (with_comment) os << "/* detection family " << (h & 0xffff) << " */\n";
        os << "rule synth_" << i;
        if (with_tags) {
            os << " : " << tags[rng.below(tags.size())];
            if (rng.below(2) == 0) os << " " << tags[rng.below(tags.size())];
        }
        os << "\n{\n";
        if (with_meta) {
            os << "    meta:\n";
            os << "        author = \"analyst_" << rng.below(9) << "\"\n";
            os << "        description = \"synthetic " << words[rng.below(words.size())]
               << " detector\"\n";
            os << "        score = " << (50 + rng.below(50)) << "\n";
        }
        os << "    strings:\n";
        for (std::size_t s = 0; s < n_text; ++s) {
            os << "        $s" << s << " = \"" << words[rng.below(words.size())]
               << "_" << (rng.next() & 0xfff) << "\"";
            if (rng.below(2) == 0) os << " " << mods[rng.below(mods.size())];
            if (rng.below(6) == 0) os << " // inline note " << rng.below(100);
            os << "\n";
        }
        if (with_hex) {
            os << "        $h0 = { " << hex_byte_at(h, 0, upper_hex) << " "
               << hex_byte_at(h, 1, upper_hex);
            switch (rng.below(4)) {
                case 0: os << " ?? " << hex_byte_at(h, 2, upper_hex); break;
                case 1: os << " [4-8] " << hex_byte_at(h, 3, upper_hex); break;
                case 2:
                    os << " ( " << hex_byte_at(h, 2, upper_hex) << " | "
                       << hex_byte_at(h, 3, upper_hex) << " )";
                    break;
                default: os << " " << hex_byte_at(h, 2, upper_hex) << " 4?"; break;
            }
            os << " }\n";
        }
        if (with_regex) {
            os << "        $r0 = /" << words[rng.below(words.size())]
               << "[0-9]{2," << (3 + rng.below(4)) << "}/";
            if (rng.below(2) == 0) os << " nocase";
            os << "\n";
        }
        os << "    condition:\n        ";
        switch (cond_shape) {
            case 0: os << "all of them"; break;
            case 1: os << "any of ($s*)"; break;
            case 2: os << (1 + rng.below(n_text)) << " of them and filesize < "
                        << (100 + rng.below(900)) << "KB"; break;
            case 3: os << "$s0 at 0 or all of them"; break;
            case 4:
                os << "for all i in (1..#s0) : ( @s0[i] < filesize - "
                   << rng.below(64) << " )";
                break;
            case 5:
                os << "uint16(0) == 0x5A4D and pe.number_of_sections > "
                   << (1 + rng.below(8));
                break;
            case 6: os << "not ($s0 in (0..1024)) and all of them"; break;
            default:
                os << "($s0 or #s0 > " << (1 + rng.below(5)) << ") and "
                   << "math.entropy(0, filesize) > 6.5";
                break;
        }
        os << "\n}\n";
        rules.push_back(os.str());
    }
    return rules;
}

namespace {

struct AuthorStyle {
    std::string var_prefix;
    bool numbered_from_one;
    bool upper_hex;
    std::string indent;
    int condition_shape;  // 0 all-of, 1 and-chain, 2 nested parens,
                          // 3 of-with-set, 4 count-based
};

AuthorStyle style_for(std::size_t author) {
    static const std::vector<AuthorStyle> styles = {
        {"$s", true, false, "    ", 0},
        {"$str_", false, true, "\t", 1},
        {"$a", true, true, "  ", 2},
        {"$x_", false, false, "    ", 3},
        {"$grp", true, false, "\t", 4},
    };
    return styles[author % styles.size()];
}

// shared detection content for rule index i: the literal strings and hex
// bytes every author embeds
struct RuleContent {
    std::vector<std::string> literals;
    std::uint64_t hex_seed;
};

RuleContent content_for(std::size_t i) {
    SplitMix64 rng(0x5eed0000 + i);
    RuleContent c;
    const std::size_t n = 3;
    for (std::size_t k = 0; k < n; ++k) {
        c.literals.push_back("artifact_" + std::to_string(rng.next() % 100000));
    }
    c.hex_seed = rng.next();
    return c;
}

std::string build_rule(const std::string& name, const RuleContent& content,
                       const AuthorStyle& style, const std::string& author) {
    std::ostringstream os;
    const std::size_t n = content.literals.size();
    auto var = [&](std::size_t k) {
        return style.var_prefix +
               std::to_string(style.numbered_from_one ? k + 1 : k);
    };

    os << "rule " << name << "\n{\n";
    os << style.indent << "meta:\n";
    os << style.indent << style.indent << "author = \"" << author << "\"\n";
    os << style.indent << "strings:\n";
    for (std::size_t k = 0; k < n; ++k) {
        os << style.indent << style.indent << var(k) << " = \""
           << content.literals[k] << "\"\n";
    }
    os << style.indent << style.indent << style.var_prefix << "h = { ";
    for (int b = 0; b < 6; ++b) {
        os << hex_byte_at(content.hex_seed, b, style.upper_hex) << " ";
    }
    os << "}\n";
    os << style.indent << "condition:\n" << style.indent << style.indent;
    switch (style.condition_shape) {
        case 0:
            os << "all of them";
            break;
        case 1:
            for (std::size_t k = 0; k < n; ++k) {
                if (k) os << " and ";
                os << var(k);
            }
            os << " and " << style.var_prefix << "h";
            break;
        case 2:
            os << "(" << var(0) << " and (" << var(1) << " and (" << var(2)
               << " and " << style.var_prefix << "h)))";
            break;
        case 3:
            os << static_cast<int>(n) << " of (" << style.var_prefix << "*) and "
               << style.var_prefix << "h";
            break;
        default:
            os << "#" << var(0).substr(1) << " > 0 and all of them";
            break;
    }
    os << "\n}\n";
    return os.str();
}

std::vector<RuleRecord> styled_corpus(std::size_t authors,
                                      std::size_t rules_per_author,
                                      bool rigid_template) {
    std::vector<RuleRecord> records;
    for (std::size_t a = 0; a < authors; ++a) {
        const std::string author = "Author_" + std::string(1, char('A' + a));
        AuthorStyle style = rigid_template ? style_for(0) : style_for(a);
        for (std::size_t i = 0; i < rules_per_author; ++i) {
            RuleRecord rec;
            rec.rule_name = "planted_" + std::to_string(i);
            rec.author = author;
            rec.repo = "synth";
            rec.malware_family = "SynthFam";
            rec.timestamp = 2023;
            rec.source_path = "synthetic";
            // under the rigid template the meta author still differs, but
            // meta is stripped before any classifier sees the body
            rec.raw_text =
                build_rule(rec.rule_name, content_for(i), style, author);
            records.push_back(std::move(rec));
        }
    }
    return records;
}

}  // namespace

std::vector<RuleRecord> planted_style_corpus(std::size_t authors,
                                             std::size_t rules_per_author) {
    return styled_corpus(authors, rules_per_author, false);
}

std::vector<RuleRecord> template_corpus(std::size_t authors,
                                        std::size_t rules_per_author) {
    return styled_corpus(authors, rules_per_author, true);
}

}  // namespace ystylo::testsupport
