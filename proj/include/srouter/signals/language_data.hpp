// Copyright 2026 The srouter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <string_view>

/// Bundled snippets behind the built-in language profiles. `profile` builds
/// the trigram table; `held_out` is kept apart for calibration checks.
namespace srouter::language_data {

struct Sample {
  std::string_view code;
  std::string_view profile;
  std::string_view held_out;
};

inline constexpr std::array<Sample, 8> kSamples{{
    {"en",
     R"lang(The old harbour town wakes slowly in the winter. Fishermen carry their nets down to the water while the bakery on the corner opens its shutters and the smell of fresh bread drifts along the street. Children walk to school with their hands in their pockets, and the church bell rings the hour. In the afternoon the wind grows stronger and the boats return early. People gather in the small library to read newspapers, talk about the weather and share stories about the years when the river froze and nobody could cross the bridge. There is a quiet pride in the way they remember those hard seasons, and a certain patience that comes from living with the sea. When evening falls the lights come on one by one, and the town settles down for another long night.)lang",
     R"lang(Every morning she would open the window, look at the grey sky and decide whether it was worth taking the long path through the forest. Most days the answer was yes, because the trees were calm and the birds were loud, and walking there made the rest of the day feel lighter than it really was.)lang"},
    {"es",
     R"lang(El viejo pueblo del puerto se despierta despacio en invierno. Los pescadores llevan sus redes hasta el agua mientras la panadería de la esquina abre sus puertas y el olor del pan recién hecho recorre la calle. Los niños caminan a la escuela con las manos en los bolsillos y la campana de la iglesia da la hora. Por la tarde el viento se hace más fuerte y los barcos vuelven temprano. La gente se reúne en la pequeña biblioteca para leer los periódicos, hablar del tiempo y contar historias de los años en que el río se congeló y nadie podía cruzar el puente. Hay un orgullo tranquilo en la manera en que recuerdan aquellas estaciones difíciles, y una paciencia que nace de vivir junto al mar. Cuando cae la noche las luces se encienden una por una.)lang",
     R"lang(Cada mañana abría la ventana, miraba el cielo gris y decidía si valía la pena tomar el camino largo por el bosque. Casi siempre la respuesta era que sí, porque los árboles estaban tranquilos y los pájaros cantaban, y caminar por allí hacía que el resto del día pareciera más ligero.)lang"},
    {"fr",
     R"lang(La vieille ville du port se réveille lentement en hiver. Les pêcheurs portent leurs filets jusqu'à l'eau pendant que la boulangerie du coin ouvre ses volets et que l'odeur du pain frais se répand dans la rue. Les enfants marchent vers l'école les mains dans les poches et la cloche de l'église sonne l'heure. L'après-midi, le vent devient plus fort et les bateaux rentrent tôt. Les habitants se retrouvent dans la petite bibliothèque pour lire les journaux, parler du temps qu'il fait et raconter les années où la rivière a gelé et où personne ne pouvait traverser le pont. Il y a une fierté tranquille dans leur façon de se souvenir de ces saisons difficiles, et une patience qui vient de la vie au bord de la mer.)lang",
     R"lang(Chaque matin elle ouvrait la fenêtre, regardait le ciel gris et se demandait s'il valait la peine de prendre le long chemin à travers la forêt. La plupart du temps la réponse était oui, parce que les arbres étaient calmes et que les oiseaux chantaient fort, et que cette promenade rendait le reste de la journée plus léger.)lang"},
    {"de",
     R"lang(Die alte Hafenstadt erwacht im Winter nur langsam. Die Fischer tragen ihre Netze hinunter zum Wasser, während die Bäckerei an der Ecke ihre Läden öffnet und der Duft von frischem Brot durch die Straße zieht. Die Kinder gehen mit den Händen in den Taschen zur Schule, und die Glocke der Kirche schlägt die Stunde. Am Nachmittag wird der Wind stärker und die Boote kehren früh zurück. Die Leute treffen sich in der kleinen Bibliothek, um Zeitung zu lesen, über das Wetter zu sprechen und Geschichten aus den Jahren zu erzählen, in denen der Fluss zugefroren war und niemand die Brücke überqueren konnte. Es liegt ein stiller Stolz in der Art, wie sie sich an diese schweren Zeiten erinnern, und eine Geduld, die vom Leben am Meer kommt.)lang",
     R"lang(Jeden Morgen öffnete sie das Fenster, schaute in den grauen Himmel und überlegte, ob sich der lange Weg durch den Wald lohnen würde. Meistens war die Antwort ja, denn die Bäume waren ruhig und die Vögel sangen laut, und der Spaziergang machte den Rest des Tages leichter.)lang"},
    {"pt",
     R"lang(A velha cidade do porto acorda devagar no inverno. Os pescadores levam as suas redes até à água enquanto a padaria da esquina abre as portas e o cheiro do pão fresco espalha-se pela rua. As crianças caminham para a escola com as mãos nos bolsos e o sino da igreja toca as horas. À tarde o vento fica mais forte e os barcos voltam cedo. As pessoas reúnem-se na pequena biblioteca para ler os jornais, falar do tempo e contar histórias dos anos em que o rio congelou e ninguém conseguia atravessar a ponte. Há um orgulho tranquilo na maneira como eles se lembram dessas estações difíceis, e uma paciência que vem de viver junto ao mar. Quando a noite cai as luzes acendem-se uma a uma.)lang",
     R"lang(Todas as manhãs ela abria a janela, olhava para o céu cinzento e decidia se valia a pena fazer o caminho comprido pela floresta. Quase sempre a resposta era sim, porque as árvores estavam calmas e os pássaros cantavam alto, e andar por ali tornava o resto do dia mais leve.)lang"},
    {"ru",
     R"lang(Старый портовый город медленно просыпается зимой. Рыбаки несут сети к воде, а булочная на углу открывает ставни, и запах свежего хлеба расходится по улице. Дети идут в школу, засунув руки в карманы, а церковный колокол бьёт час. После обеда ветер становится сильнее, и лодки возвращаются рано. Люди собираются в маленькой библиотеке, читают газеты, говорят о погоде и рассказывают истории о тех годах, когда река замерзала и никто не мог перейти через мост. В том, как они вспоминают эти трудные времена, есть тихая гордость и терпение, которое приходит от жизни у моря. Когда наступает вечер, огни загораются один за другим.)lang",
     R"lang(Каждое утро она открывала окно, смотрела на серое небо и решала, стоит ли идти длинной дорогой через лес. Почти всегда ответ был да, потому что деревья были спокойны, птицы громко пели, и прогулка делала остаток дня легче.)lang"},
    {"zh",
     R"lang(冬天的时候，这个古老的港口小镇醒得很慢。渔民们把渔网搬到水边，街角的面包店打开了窗板，新鲜面包的香味沿着街道飘散开来。孩子们把手插在口袋里走路去上学，教堂的钟声敲响了整点。到了下午，风变得更大了，渔船早早地回到了港口。人们聚集在小小的图书馆里看报纸，谈论天气，分享那些河水结冰、没有人能够过桥的年份里发生的故事。他们回忆那些艰难季节的方式里有一种安静的骄傲，还有一种与大海一起生活而产生的耐心。夜幕降临的时候，灯光一盏接一盏地亮起来，小镇又安静地度过一个漫长的夜晚。)lang",
     R"lang(每天早上她都会打开窗户，看看灰色的天空，然后决定是否值得走那条穿过森林的长路。大多数时候答案是肯定的，因为树木很安静，鸟儿叫得很响，在那里散步会让这一天剩下的时间感觉轻松许多。)lang"},
    {"ja",
     R"lang(冬になると、古い港町はゆっくりと目を覚まします。漁師たちは網を水辺まで運び、角のパン屋はシャッターを開け、焼きたてのパンの香りが通りに広がっていきます。子どもたちはポケットに手を入れて学校へ歩いていき、教会の鐘が時を告げます。午後になると風が強くなり、船は早めに港へ戻ってきます。人々は小さな図書館に集まって新聞を読み、天気について話し、川が凍って誰も橋を渡れなかった年の思い出を語り合います。彼らがその厳しい季節を思い出すときには、静かな誇りと、海とともに暮らすことから生まれる忍耐があります。)lang",
     R"lang(毎朝、彼女は窓を開けて灰色の空を眺め、森を抜ける長い道を歩く価値があるかどうかを決めていました。たいていの場合、答えははいでした。木々は静かで、鳥たちはにぎやかに鳴いていて、そこを歩くとその日の残りが少し軽く感じられたからです。)lang"},
}};

}  // namespace srouter::language_data
